//! Deterministic MLP policy `a = μ_θ(s)` and the fixed-covariance Gaussian
//! evaluation density used to compare trajectories between policies.

use crate::error::{check_dim, Error, Result};
use crate::numkit::{MlpBatch, MlpSpec, MlpTape, Rng};
use crate::rollout::Trajectory;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Flat parameter vector of the mean network together with its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    spec: MlpSpec,
    theta: Vec<f64>,
}

impl PolicyParams {
    pub fn new(spec: MlpSpec, theta: Vec<f64>) -> Result<Self> {
        spec.check_params(&theta)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy parameters"));
        }
        Ok(Self { spec, theta })
    }

    pub fn init(spec: MlpSpec, rng: &mut Rng) -> Self {
        let theta = spec.init_params(rng);
        Self { spec, theta }
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let theta = vec![0.0; spec.param_count()];
        Self { spec, theta }
    }

    /// Same network shape, new parameter values.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.spec.clone(), theta)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Diagonal evaluation covariance, stored as log-variances per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalNoise {
    log_var: Vec<f64>,
}

impl EvalNoise {
    pub fn new(log_var: Vec<f64>) -> Result<Self> {
        if log_var.is_empty() {
            return Err(Error::Empty("EvalNoise"));
        }
        if log_var.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("EvalNoise log-variance"));
        }
        Ok(Self { log_var })
    }

    pub fn isotropic(action_dim: usize, log_var: f64) -> Result<Self> {
        Self::new(vec![log_var; action_dim])
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    pub fn dim(&self) -> usize {
        self.log_var.len()
    }

    pub fn inv_var(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| (-lv).exp()).collect()
    }

    pub fn std_dev(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| (0.5 * lv).exp()).collect()
    }

    /// Per-step constant `−½ Σ_d (ln 2π + log_var_d)`.
    fn log_norm(&self) -> f64 {
        -0.5 * self.log_var.iter().map(|lv| LN_2PI + lv).sum::<f64>()
    }
}

/// Deterministic action `μ_θ(s)`; bound clipping is left to the environment.
pub fn act(params: &PolicyParams, state: &[f64]) -> Result<Vec<f64>> {
    crate::numkit::mlp_forward(&params.spec, &params.theta, state)
}

/// Reusable evaluator for trajectory log-likelihoods under the Gaussian
/// evaluation policy. Keeps one MLP tape so repeated calls do not allocate.
#[derive(Debug, Clone)]
pub struct LogLikEvaluator {
    tape: MlpTape,
    batch: MlpBatch,
    inv_var: Vec<f64>,
    log_norm: f64,
    residual: Vec<f64>,
}

impl LogLikEvaluator {
    pub fn new(spec: &MlpSpec, noise: &EvalNoise) -> Result<Self> {
        check_dim("evaluation noise", spec.output_dim(), noise.dim())?;
        Ok(Self {
            tape: MlpTape::new(spec),
            batch: MlpBatch::new(spec),
            inv_var: noise.inv_var(),
            log_norm: noise.log_norm(),
            residual: vec![0.0; noise.dim()],
        })
    }

    fn check_traj(&self, traj: &Trajectory) -> Result<()> {
        if traj.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        check_dim("trajectory state dim", self.tape.spec().input_dim(), traj.state_dim())?;
        check_dim("trajectory action dim", self.tape.spec().output_dim(), traj.action_dim())
    }

    /// `Σ_t log N(a_t | μ_θ(s_t), Σ)`.
    pub fn log_lik(&mut self, theta: &[f64], traj: &Trajectory) -> Result<f64> {
        self.check_traj(traj)?;
        self.batch.forward(theta, traj.states())?;
        let total = self.quadratic_terms(traj, None);
        if !total.is_finite() {
            return Err(Error::NonFinite("trajectory log-likelihood"));
        }
        Ok(total)
    }

    /// Log-likelihood, with its θ-gradient scaled by `scale` added into `grad`.
    pub fn log_lik_and_grad(
        &mut self,
        theta: &[f64],
        traj: &Trajectory,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_traj(traj)?;
        check_dim("log-likelihood gradient", theta.len(), grad.len())?;
        self.batch.forward(theta, traj.states())?;
        let mut cotangent = std::mem::take(&mut self.residual);
        let total = self.quadratic_terms(traj, Some((scale, &mut cotangent)));
        let result = self.batch.backward(theta, &cotangent, grad);
        self.residual = cotangent;
        result?;
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("trajectory log-likelihood gradient"));
        }
        Ok(total)
    }

    /// Sums the per-step log densities of the last batch forward pass and,
    /// if asked, fills the scaled output cotangent `scale · Σ⁻¹ (a − μ)`
    /// (since ∂/∂μ log N(a | μ, Σ) = Σ⁻¹ (a − μ)), laid out output-major.
    fn quadratic_terms(&self, traj: &Trajectory, mut cotangent: Option<(f64, &mut Vec<f64>)>) -> f64 {
        let n = traj.len();
        let actions = traj.actions();
        if let Some((_, c)) = cotangent.as_mut() {
            c.clear();
            c.resize(self.inv_var.len() * n, 0.0);
        }
        let mut quad = 0.0;
        for (d, &iv) in self.inv_var.iter().enumerate() {
            let mean = self.batch.output(d);
            for t in 0..n {
                let r = actions.get(t, d) - mean[t];
                quad += r * r * iv;
                if let Some((scale, c)) = cotangent.as_mut() {
                    c[d * n + t] = *scale * r * iv;
                }
            }
        }
        n as f64 * self.log_norm - 0.5 * quad
    }

    /// Gradient of `log N(a | μ_θ(s), Σ)` for a single step, scaled and accumulated.
    pub(crate) fn step_score(
        &mut self,
        theta: &[f64],
        state: &[f64],
        action: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        let mean = self.tape.forward(theta, state)?;
        for d in 0..action.len() {
            self.residual[d] = (action[d] - mean[d]) * self.inv_var[d];
        }
        self.tape.backward(theta, &self.residual, scale, grad)
    }
}


pub fn traj_log_lik(params: &PolicyParams, noise: &EvalNoise, traj: &Trajectory) -> Result<f64> {
    LogLikEvaluator::new(&params.spec, noise)?.log_lik(&params.theta, traj)
}

pub fn traj_log_lik_grad(
    params: &PolicyParams,
    noise: &EvalNoise,
    traj: &Trajectory,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; params.len()];
    LogLikEvaluator::new(&params.spec, noise)?.log_lik_and_grad(&params.theta, traj, 1.0, &mut grad)?;
    Ok(grad)
}

/// Samples `μ_θ(s) + Σ^{1/2} ε` for the stochastic REINFORCE baseline.
pub fn sample_action(params: &PolicyParams, noise: &EvalNoise, state: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    let mut a = act(params, state)?;
    check_dim("evaluation noise", a.len(), noise.dim())?;
    for (ai, sd) in a.iter_mut().zip(noise.std_dev()) {
        *ai += sd * rng.normal();
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{finite_diff_grad, mlp_forward, RealMat};
    use std::f64::consts::PI;

    fn gaussian_density(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    fn random_params(spec: &MlpSpec, rng: &mut Rng, scale: f64) -> PolicyParams {
        let theta = (0..spec.param_count()).map(|_| scale * rng.normal()).collect();
        PolicyParams::new(spec.clone(), theta).unwrap()
    }

    fn random_traj(rng: &mut Rng, h: usize, sd: usize, ad: usize) -> Trajectory {
        let states = RealMat::from_vec(h, sd, (0..h * sd).map(|_| rng.normal()).collect()).unwrap();
        let actions = RealMat::from_vec(h, ad, (0..h * ad).map(|_| rng.normal()).collect()).unwrap();
        Trajectory::new(states, actions, vec![1.0; h], 1.0).unwrap()
    }

    /// Replace actions with the policy mean everywhere.
    fn on_mean(params: &PolicyParams, traj: &Trajectory) -> Trajectory {
        let mut actions = RealMat::with_cols(traj.action_dim());
        for s in traj.states().iter_rows() {
            actions.push_row(&act(params, s).unwrap()).unwrap();
        }
        Trajectory::new(traj.states().clone(), actions, traj.rewards().to_vec(), 1.0).unwrap()
    }

    #[test]
    fn zero_params_zero_action_and_determinism() {
        let spec = MlpSpec::new(3, vec![4], 1).unwrap();
        let p = PolicyParams::zeros(spec.clone());
        assert_eq!(act(&p, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0]);
        let mut rng = Rng::new(3, 0);
        let q = random_params(&spec, &mut rng, 0.5);
        let s = [0.1, -0.2, 0.3];
        let a1 = act(&q, &s).unwrap();
        assert_eq!(a1, act(&q, &s).unwrap());
        assert_eq!(a1, mlp_forward(&spec, q.theta(), &s).unwrap());
        assert!(act(&q, &[0.0]).is_err());
    }

    #[test]
    fn params_reject_bad_input() {
        let spec = MlpSpec::new(2, vec![], 1).unwrap();
        assert!(PolicyParams::new(spec.clone(), vec![0.0; 2]).is_err());
        assert!(PolicyParams::new(spec, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(EvalNoise::new(vec![]).is_err());
        assert!(EvalNoise::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn on_mean_log_lik_closed_form() {
        let spec = MlpSpec::new(2, vec![5], 1).unwrap();
        let mut rng = Rng::new(9, 0);
        let p = random_params(&spec, &mut rng, 0.7);
        let traj = on_mean(&p, &random_traj(&mut rng, 7, 2, 1));
        let lv = 0.8;
        let noise = EvalNoise::isotropic(1, lv).unwrap();
        let ll = traj_log_lik(&p, &noise, &traj).unwrap();
        let want = -(7.0 / 2.0) * ((2.0 * PI).ln() + lv);
        assert!((ll - want).abs() < 1e-12);
        let g = traj_log_lik_grad(&p, &noise, &traj).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn log_lik_additive_over_concatenation() {
        let spec = MlpSpec::new(2, vec![3], 2).unwrap();
        let mut rng = Rng::new(10, 0);
        let p = random_params(&spec, &mut rng, 0.5);
        let noise = EvalNoise::new(vec![0.3, -0.4]).unwrap();
        let a = random_traj(&mut rng, 4, 2, 2);
        let doubled = Trajectory::new(
            RealMat::from_vec(8, 2, [a.states().as_slice(), a.states().as_slice()].concat()).unwrap(),
            RealMat::from_vec(8, 2, [a.actions().as_slice(), a.actions().as_slice()].concat()).unwrap(),
            vec![1.0; 8],
            1.0,
        )
        .unwrap();
        let l1 = traj_log_lik(&p, &noise, &a).unwrap();
        let l2 = traj_log_lik(&p, &noise, &doubled).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-12 * l1.abs().max(1.0));
        let g1 = traj_log_lik_grad(&p, &noise, &a).unwrap();
        let g2 = traj_log_lik_grad(&p, &noise, &doubled).unwrap();
        for (x, y) in g1.iter().zip(&g2) {
            assert!((y - 2.0 * x).abs() < 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn log_lik_matches_density_product() {
        let spec = MlpSpec::new(3, vec![6, 4], 2).unwrap();
        let mut rng = Rng::new(12, 0);
        for _ in 0..10 {
            let p = random_params(&spec, &mut rng, 0.5);
            let noise = EvalNoise::new(vec![rng.normal() * 0.5, rng.normal() * 0.5]).unwrap();
            let traj = random_traj(&mut rng, 5, 3, 2);
            let var: Vec<f64> = noise.log_var().iter().map(|l| l.exp()).collect();
            let mut density = 1.0;
            for t in 0..traj.len() {
                let mu = mlp_forward(&spec, p.theta(), traj.states().row(t)).unwrap();
                for d in 0..2 {
                    density *= gaussian_density(traj.actions().get(t, d), mu[d], var[d]);
                }
            }
            let ll = traj_log_lik(&p, &noise, &traj).unwrap();
            assert!((ll.exp() - density).abs() <= 1e-10 * density, "{} vs {density}", ll.exp());
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = MlpSpec::new(4, vec![8, 8], 1).unwrap();
        let mut rng = Rng::new(13, 0);
        let noise = EvalNoise::isotropic(1, 0.5).unwrap();
        for _ in 0..5 {
            let p = random_params(&spec, &mut rng, 0.4);
            let traj = random_traj(&mut rng, 6, 4, 1);
            let g = traj_log_lik_grad(&p, &noise, &traj).unwrap();
            let fd = finite_diff_grad(
                |th| traj_log_lik(&p.with_theta(th.to_vec()).unwrap(), &noise, &traj).unwrap(),
                p.theta(),
                1e-5,
            )
            .unwrap();
            let scale = crate::numkit::inf_norm(&fd).max(1e-8);
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err / scale <= 1e-5, "relative error {}", err / scale);
        }
    }

    #[test]
    fn log_var_derivative_matches_formula() {
        // ∂ log N / ∂ log_var = ½ (r²/var − 1) per dimension
        let spec = MlpSpec::new(2, vec![3], 1).unwrap();
        let mut rng = Rng::new(14, 0);
        let p = random_params(&spec, &mut rng, 0.5);
        let traj = random_traj(&mut rng, 1, 2, 1);
        let lv = 0.3;
        let mu = act(&p, traj.states().row(0)).unwrap()[0];
        let r = traj.actions().get(0, 0) - mu;
        let fd = finite_diff_grad(
            |x| traj_log_lik(&p, &EvalNoise::isotropic(1, x[0]).unwrap(), &traj).unwrap(),
            &[lv],
            1e-6,
        )
        .unwrap()[0];
        let want = 0.5 * (r * r / lv.exp() - 1.0);
        assert!((fd - want).abs() < 1e-8);
    }

    #[test]
    fn permutation_invariance() {
        let spec = MlpSpec::new(2, vec![4], 1).unwrap();
        let mut rng = Rng::new(15, 0);
        let p = random_params(&spec, &mut rng, 0.5);
        let noise = EvalNoise::isotropic(1, 0.0).unwrap();
        let traj = random_traj(&mut rng, 6, 2, 1);
        let order = [3usize, 0, 5, 1, 4, 2];
        let mut s = RealMat::with_cols(2);
        let mut a = RealMat::with_cols(1);
        for &t in &order {
            s.push_row(traj.states().row(t)).unwrap();
            a.push_row(traj.actions().row(t)).unwrap();
        }
        let shuffled = Trajectory::new(s, a, vec![1.0; 6], 1.0).unwrap();
        let l1 = traj_log_lik(&p, &noise, &traj).unwrap();
        let l2 = traj_log_lik(&p, &noise, &shuffled).unwrap();
        assert!((l1 - l2).abs() < 1e-12 * l1.abs());
    }

    #[test]
    fn sampled_actions_have_requested_spread() {
        let spec = MlpSpec::new(1, vec![], 1).unwrap();
        let p = PolicyParams::zeros(spec);
        let noise = EvalNoise::isotropic(1, 2.0f64.ln()).unwrap();
        let mut rng = Rng::new(16, 0);
        let n = 20000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_action(&p, &noise, &[0.0], &mut rng).unwrap()[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 2.0).abs() < 0.1);
    }
}
