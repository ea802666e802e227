use super::{EnvSpec, EnvState, Environment};
use crate::numkit::Rng;

/// Cart-pole balancing with a continuous horizontal force in `[-10, 10]` N.
///
/// The action is the normalized force in `[-1, 1]`, scaled by
/// `force_scale = 10` N before it enters the dynamics.
///
/// State `[x, ẋ, θ, θ̇]`; explicit Euler with `Δt = 0.02`; +1 reward per step;
/// the episode fails when `|θ| > 12°` or `|x| > 2.4`. Initial components are
/// uniform in `[-0.05, 0.05]`.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    pub half_length: f64,
    pub force_scale: f64,
    pub dt: f64,
    pub angle_limit: f64,
    pub position_limit: f64,
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "cartpole",
                state_dim: 4,
                action_dim: 1,
                horizon: 100,
                action_bounds: vec![(-1.0, 1.0)],
            },
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            half_length: 0.5,
            force_scale: 10.0,
            dt: 0.02,
            angle_limit: 12.0_f64.to_radians(),
            position_limit: 2.4,
        }
    }

    /// Continuous-time accelerations `(ẍ, θ̈)` for a given state and force.
    pub fn accelerations(&self, obs: &[f64], force: f64) -> (f64, f64) {
        let (theta, theta_dot) = (obs[2], obs[3]);
        let total_mass = self.mass_cart + self.mass_pole;
        let pole_ml = self.mass_pole * self.half_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_ml * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (4.0 / 3.0 - self.mass_pole * cos * cos / total_mass));
        let x_acc = temp - pole_ml * theta_acc * cos / total_mass;
        (x_acc, theta_acc)
    }

    pub fn is_failed(&self, obs: &[f64]) -> bool {
        obs[0].abs() > self.position_limit || obs[2].abs() > self.angle_limit
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> EnvState {
        EnvState::initial((0..4).map(|_| rng.uniform_range(-0.05, 0.05)).collect())
    }

    fn dynamics(&self, obs: &[f64], action: &[f64]) -> (Vec<f64>, f64, bool) {
        let (x_acc, theta_acc) = self.accelerations(obs, self.force_scale * action[0]);
        let next = vec![
            obs[0] + self.dt * obs[1],
            obs[1] + self.dt * x_acc,
            obs[2] + self.dt * obs[3],
            obs[3] + self.dt * theta_acc,
        ];
        let failed = self.is_failed(&next);
        (next, 1.0, failed)
    }

    fn max_return(&self) -> f64 {
        self.spec.horizon as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Equations of motion written out from the Lagrangian of a cart with a
    /// uniform rod (moment of inertia m l²/3 about the pivot), solved as a 2×2
    /// linear system instead of the substituted closed form.
    fn lagrangian_accel(s: &[f64], f: f64) -> (f64, f64) {
        let (mc, mp, l, g) = (1.0, 0.1, 0.5, 9.8);
        let (th, thd) = (s[2], s[3]);
        // [M + m,   m l cos θ] [ẍ]   [F + m l θ̇² sin θ]
        // [cos θ,   4l/3     ] [θ̈] = [g sin θ         ]
        let a11 = mc + mp;
        let a12 = mp * l * th.cos();
        let a21 = th.cos();
        let a22 = 4.0 * l / 3.0;
        let b1 = f + mp * l * thd * thd * th.sin();
        let b2 = g * th.sin();
        let det = a11 * a22 - a12 * a21;
        let theta_acc = (a11 * b2 - a21 * b1) / det;
        let x_acc = (b1 - a12 * theta_acc) / a11;
        (x_acc, theta_acc)
    }

    fn rk4_reference(s: &[f64], f: f64, dt: f64, substeps: usize) -> Vec<f64> {
        let deriv = |y: &[f64]| {
            let (xa, ta) = lagrangian_accel(y, f);
            [y[1], xa, y[3], ta]
        };
        let h = dt / substeps as f64;
        let mut y = [s[0], s[1], s[2], s[3]];
        for _ in 0..substeps {
            let k1 = deriv(&y);
            let y2: Vec<f64> = (0..4).map(|i| y[i] + 0.5 * h * k1[i]).collect();
            let k2 = deriv(&y2);
            let y3: Vec<f64> = (0..4).map(|i| y[i] + 0.5 * h * k2[i]).collect();
            let k3 = deriv(&y3);
            let y4: Vec<f64> = (0..4).map(|i| y[i] + h * k3[i]).collect();
            let k4 = deriv(&y4);
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y.to_vec()
    }

    #[test]
    fn reset_within_init_range() {
        let env = CartPole::new();
        let mut rng = Rng::new(404, 0);
        for _ in 0..1000 {
            let s = env.reset(&mut rng);
            assert!(s.obs.iter().all(|v| v.abs() <= 0.05));
            assert_eq!(s.t, 0);
        }
        assert_eq!(env.reset(&mut Rng::new(3, 1)), env.reset(&mut Rng::new(3, 1)));
    }

    #[test]
    fn origin_is_equilibrium() {
        let env = CartPole::new();
        let tr = env.step(&EnvState::initial(vec![0.0; 4]), &[0.0]).unwrap();
        assert_eq!(tr.next.obs, vec![0.0; 4]);
        assert_eq!(tr.reward, 1.0);
        assert!(!tr.done);
    }

    #[test]
    fn failure_threshold_terminates() {
        let env = CartPole::new();
        let tr = env.step(&EnvState::initial(vec![0.0, 0.0, 0.22, 0.0]), &[0.0]).unwrap();
        assert!(tr.done);
        let tr = env.step(&EnvState::initial(vec![2.45, 0.0, 0.0, 0.0]), &[0.0]).unwrap();
        assert!(tr.done);
        let tr = env.step(&EnvState::initial(vec![0.0, 0.0, 0.2, 0.0]), &[0.0]).unwrap();
        assert!(!tr.done);
    }

    #[test]
    fn accelerations_match_lagrangian_form() {
        let env = CartPole::new();
        let mut rng = Rng::new(77, 0);
        for _ in 0..200 {
            let s: Vec<f64> = (0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let f = rng.uniform_range(-10.0, 10.0);
            let (xa, ta) = env.accelerations(&s, f);
            let (xr, tr) = lagrangian_accel(&s, f);
            assert!((xa - xr).abs() < 1e-12 && (ta - tr).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_step_matches_reference_update() {
        let env = CartPole::new();
        let mut rng = Rng::new(78, 0);
        for _ in 0..200 {
            let s: Vec<f64> = (0..4).map(|_| rng.uniform_range(-0.2, 0.2)).collect();
            let a = rng.uniform_range(-1.5, 1.5);
            let tr = env.step(&EnvState::initial(s.clone()), &[a]).unwrap();
            let (xr, thr) = lagrangian_accel(&s, 10.0 * a.clamp(-1.0, 1.0));
            let want = [s[0] + 0.02 * s[1], s[1] + 0.02 * xr, s[2] + 0.02 * s[3], s[3] + 0.02 * thr];
            for i in 0..4 {
                assert!((tr.next.obs[i] - want[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn euler_step_tracks_fine_integrator_to_first_order() {
        // explicit Euler has local error O(Δt²) against the continuous ODE
        let env = CartPole::new();
        let mut rng = Rng::new(79, 0);
        for _ in 0..100 {
            let s: Vec<f64> = (0..4).map(|_| rng.uniform_range(-0.2, 0.2)).collect();
            let f = rng.uniform_range(-10.0, 10.0);
            let tr = env.step(&EnvState::initial(s.clone()), &[f / 10.0]).unwrap();
            let fine = rk4_reference(&s, f, 0.02, 200);
            for i in 0..4 {
                assert!((tr.next.obs[i] - fine[i]).abs() < 0.02 * 0.02 * 20.0);
            }
        }
    }
}
