use super::{EnvSpec, EnvState, Environment};
use crate::numkit::Rng;

/// Continuous mountain car.
///
/// State `[position, velocity]`, force in `[-1, 1]`. Reward is `−0.1·a²` per
/// step plus 100 on the step that reaches `position ≥ 0.45`, which also ends
/// the episode. Initial position is uniform in `[-0.6, -0.4]` at rest.
#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    pub power: f64,
    pub min_position: f64,
    pub max_position: f64,
    pub max_speed: f64,
    pub goal_position: f64,
    pub goal_reward: f64,
    pub action_cost: f64,
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "mountaincar",
                state_dim: 2,
                action_dim: 1,
                horizon: 500,
                action_bounds: vec![(-1.0, 1.0)],
            },
            power: 0.0015,
            min_position: -1.2,
            max_position: 0.6,
            max_speed: 0.07,
            goal_position: 0.45,
            goal_reward: 100.0,
            action_cost: 0.1,
        }
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> EnvState {
        EnvState::initial(vec![rng.uniform_range(-0.6, -0.4), 0.0])
    }

    fn dynamics(&self, obs: &[f64], action: &[f64]) -> (Vec<f64>, f64, bool) {
        let force = action[0];
        let mut velocity = obs[1] + force * self.power - 0.0025 * (3.0 * obs[0]).cos();
        velocity = velocity.clamp(-self.max_speed, self.max_speed);
        let position = (obs[0] + velocity).clamp(self.min_position, self.max_position);
        if position == self.min_position && velocity < 0.0 {
            velocity = 0.0;
        }
        let reached = position >= self.goal_position && velocity >= 0.0;
        let mut reward = -self.action_cost * force * force;
        if reached {
            reward += self.goal_reward;
        }
        (vec![position, velocity], reward, reached)
    }

    /// The goal bonus is paid at most once and action costs are nonpositive,
    /// so `R ∈ [−0.1·H, 100]` and `|R| ≤ max(100, 0.1·H) = 100`.
    fn max_return(&self) -> f64 {
        self.goal_reward
            .max(self.action_cost * self.spec.horizon as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_within_init_range() {
        let env = MountainCar::new();
        let mut rng = Rng::new(858, 0);
        for _ in 0..1000 {
            let s = env.reset(&mut rng);
            assert!((-0.6..=-0.4).contains(&s.obs[0]));
            assert_eq!(s.obs[1], 0.0);
        }
    }

    #[test]
    fn max_return_bound() {
        assert_eq!(MountainCar::new().max_return(), 100.0);
    }

    #[test]
    fn goal_pays_bonus_and_terminates() {
        let env = MountainCar::new();
        let tr = env.step(&EnvState::initial(vec![0.44, 0.06]), &[1.0]).unwrap();
        assert!(tr.done);
        assert!((tr.reward - (100.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn left_wall_stops_car() {
        let env = MountainCar::new();
        let tr = env.step(&EnvState::initial(vec![-1.19, -0.07]), &[-1.0]).unwrap();
        assert_eq!(tr.next.obs, vec![-1.2, 0.0]);
    }

    #[test]
    fn bang_bang_swing_reaches_goal_and_respects_bound() {
        let env = MountainCar::new();
        let mut s = env.reset(&mut Rng::new(1, 0));
        let mut ret = 0.0;
        while !s.done {
            let a = if s.obs[1] >= 0.0 { 1.0 } else { -1.0 };
            let tr = env.step(&s, &[a]).unwrap();
            ret += tr.reward;
            s = tr.next;
        }
        assert!(s.t < 500, "energy pumping should reach the goal");
        assert!(ret.abs() <= env.max_return());
        assert!(ret > 0.0);
    }
}
