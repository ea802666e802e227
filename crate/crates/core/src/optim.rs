//! Adam ascent and the inner loop that maximizes the penalized surrogate.

use crate::error::{check_dim, Error, Result};
use crate::estimators::{SupportSet, SurrogateConfig, SurrogateModel};
use crate::numkit::inf_norm;
use crate::policy::PolicyParams;

/// Bias-corrected Adam, stepping uphill.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(dim: usize, step_size: f64) -> Self {
        Self { step_size, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; dim], v: vec![0.0; dim] }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// `θ ← θ + α m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        check_dim("adam parameters", self.m.len(), params.len())?;
        check_dim("adam gradient", self.m.len(), grad.len())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("adam gradient"));
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] += self.step_size * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    let mut next = state.clone();
    let mut out = params.to_vec();
    next.step(&mut out, grad)?;
    Ok((next, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerLoopConfig {
    pub max_iters: usize,
    pub step_size: f64,
    /// Stop once the objective gradient's ∞-norm falls below this.
    pub grad_tol: f64,
    /// Stop once the best objective improved by less than this over `window` steps.
    pub improve_tol: f64,
    pub window: usize,
}

impl Default for InnerLoopConfig {
    fn default() -> Self {
        Self { max_iters: 200, step_size: 0.01, grad_tol: 1e-6, improve_tol: 1e-8, window: 10 }
    }
}

impl InnerLoopConfig {
    /// A single Adam step per outer iteration.
    pub fn one_step() -> Self {
        Self { max_iters: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.window == 0 {
            return Err(Error::Config("inner loop needs max_iters >= 1 and window >= 1".into()));
        }
        if !(self.step_size > 0.0) || !(self.grad_tol >= 0.0) || !(self.improve_tol >= 0.0) {
            return Err(Error::Config("inner loop step size must be positive, tolerances nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    GradientNorm,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerReport {
    pub iterations: usize,
    pub start_objective: f64,
    pub best_objective: f64,
    pub best_ess: f64,
    pub stop: StopReason,
}

/// Runs Adam on `θ ↦ Ĵ(θ) + penalty(θ)` from `start` and returns the best
/// iterate seen. The start itself is a candidate, so the result never has a
/// lower objective than `start`.
pub fn optimize_lower_bound(
    start: &PolicyParams,
    support: &SupportSet,
    cfg: &SurrogateConfig,
    inner: &InnerLoopConfig,
) -> Result<(PolicyParams, InnerReport)> {
    inner.validate()?;
    if support.is_empty() {
        return Err(Error::Empty("optimize_lower_bound support"));
    }
    let mut model = SurrogateModel::new(support, cfg)?;
    let mut theta = start.theta().to_vec();
    let mut adam = AdamState::new(theta.len(), inner.step_size);

    let mut eval = model.evaluate(&theta, true)?;
    let start_objective = eval.objective;
    let mut best = (eval.objective, eval.ess, theta.clone());
    let mut trace = vec![best.0];
    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;

    while iterations < inner.max_iters {
        let grad = eval.objective_grad.take().expect("requested");
        if inf_norm(&grad) < inner.grad_tol {
            stop = StopReason::GradientNorm;
            break;
        }
        adam.step(&mut theta, &grad)?;
        iterations += 1;
        eval = model.evaluate(&theta, true)?;
        if eval.supported && eval.objective > best.0 {
            best = (eval.objective, eval.ess, theta.clone());
        }
        trace.push(best.0);
        if iterations >= inner.window && trace[iterations] - trace[iterations - inner.window] < inner.improve_tol {
            stop = StopReason::Stalled;
            break;
        }
    }

    let report = InnerReport { iterations, start_objective, best_objective: best.0, best_ess: best.1, stop };
    Ok((start.with_theta(best.2)?, report))
}
