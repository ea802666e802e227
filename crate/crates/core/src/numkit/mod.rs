//! Small numerical toolkit: dense storage, a fixed-architecture MLP with
//! hand-written vector-Jacobian products, log-sum-exp, finite differences
//! and a seedable, stream-splittable random number generator.

mod fd;
mod mat;
mod mlp;
mod rng;
mod tanh;

pub use fd::finite_diff_grad;
pub use mat::{solve_spd, RealMat};
pub use mlp::{mlp_forward, mlp_vjp, MlpBatch, MlpSpec, MlpTape};
pub use rng::Rng;
pub use tanh::{tanh, tanh_in_place};

use crate::error::{Error, Result};

/// `log Σ exp(vᵢ)` with a max shift. All-`-∞` input yields `-∞`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("log_sum_exp"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("log_sum_exp"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !max.is_finite() {
        return Err(Error::NonFinite("log_sum_exp"));
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Weighted variant: `log Σ cᵢ exp(vᵢ)` for nonnegative counts `cᵢ`.
pub(crate) fn log_sum_exp_weighted(values: &[f64], counts: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("log_sum_exp"));
    }
    let max = values
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !max.is_finite() {
        return Err(Error::NonFinite("log_sum_exp"));
    }
    let sum: f64 = values
        .iter()
        .zip(counts)
        .map(|(v, c)| c * (v - max).exp())
        .sum();
    Ok(max + sum.ln())
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
