use super::{EnvSpec, EnvState, Environment};
use crate::numkit::Rng;

/// 1-D double integrator used as an exactly tractable test bed.
///
/// State `[p, v]` starts deterministically at `[1, 0]`; with `Δt = 0.1`,
/// `p' = p + Δt·v`, `v' = v + Δt·a`, `a ∈ [-1, 1]`. Reward
/// `−(p² + 0.01·a²)` uses the pre-step position. Horizon 10, no early
/// termination.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    pub dt: f64,
    pub action_cost: f64,
}

impl PointMass {
    pub fn new() -> Self {
        Self::with_horizon(10)
    }

    pub fn with_horizon(horizon: usize) -> Self {
        Self {
            spec: EnvSpec {
                name: "pointmass",
                state_dim: 2,
                action_dim: 1,
                horizon,
                action_bounds: vec![(-1.0, 1.0)],
            },
            dt: 0.1,
            action_cost: 0.01,
        }
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, _rng: &mut Rng) -> EnvState {
        EnvState::initial(vec![1.0, 0.0])
    }

    fn dynamics(&self, obs: &[f64], action: &[f64]) -> (Vec<f64>, f64, bool) {
        let (p, v, a) = (obs[0], obs[1], action[0]);
        let reward = -(p * p + self.action_cost * a * a);
        (vec![p + self.dt * v, v + self.dt * a], reward, false)
    }

    /// `|p_t|` is largest under constant full thrust away from the origin,
    /// `|p_t| ≤ 1 + Δt² · t(t−1)/2`, and every step costs at most
    /// `p_t² + 0.01`.
    fn max_return(&self) -> f64 {
        (0..self.spec.horizon)
            .map(|t| {
                let p = 1.0 + self.dt * self.dt * (t * t.saturating_sub(1)) as f64 / 2.0;
                p * p + self.action_cost
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rollout_return(env: &PointMass, actions: impl Fn(usize) -> f64) -> f64 {
        let mut s = env.reset(&mut Rng::new(0, 0));
        let mut ret = 0.0;
        while !s.done {
            let tr = env.step(&s, &[actions(s.t)]).unwrap();
            ret += tr.reward;
            s = tr.next;
        }
        ret
    }

    #[test]
    fn zero_action_return_closed_form() {
        let env = PointMass::new();
        // p stays at 1, so every step pays exactly 1
        assert_eq!(rollout_return(&env, |_| 0.0), -10.0);
    }

    #[test]
    fn max_return_is_attained_by_bang_bang_enumeration() {
        let env = PointMass::new();
        let mut worst = 0.0f64;
        for code in 0u32..(1 << 10) {
            let r = rollout_return(&env, |t| if code >> t & 1 == 1 { 1.0 } else { -1.0 });
            worst = worst.max(r.abs());
        }
        assert!((worst - env.max_return()).abs() < 1e-12, "{worst} vs {}", env.max_return());
        assert!(rollout_return(&env, |_| 0.3).abs() <= env.max_return());
    }

    #[test]
    fn deterministic_init() {
        let env = PointMass::new();
        assert_eq!(env.reset(&mut Rng::new(1, 0)).obs, vec![1.0, 0.0]);
        assert_eq!(env.reset(&mut Rng::new(2, 5)).obs, vec![1.0, 0.0]);
    }
}
