//! Return and gradient estimators.
//!
//! * Monte Carlo return and the score-function (REINFORCE) gradient.
//! * The trajectory surrogate: mixture importance weights under a fixed
//!   Gaussian evaluation density, per-count or self-normalized, with its
//!   analytic gradient.
//! * Effective sample size and the ESS-based confidence penalty.

mod reinforce;
mod surrogate;

pub use reinforce::{reinforce_grad, Baseline, LinearBaseline, ReturnWeighting};
pub use surrogate::{
    log_surrogate_weights, lower_bound, surrogate_grad, surrogate_return, LogLikCache,
    SupportSet, SurrogateEval, SurrogateModel,
};

use crate::error::{Error, Result};
use crate::policy::EvalNoise;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `Z = N`: plain importance sampling over the mixture.
    PerCount,
    /// `Z = Σ w̃ᵢ`: weighted importance sampling.
    SelfNormalized,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-count" => Ok(Self::PerCount),
            "self-normalized" => Ok(Self::SelfNormalized),
            other => Err(Error::Config(format!("unknown normalization '{other}'"))),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerCount => "per-count",
            Self::SelfNormalized => "self-normalized",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub noise: EvalNoise,
    pub normalization: Normalization,
    /// Penalty factor γ multiplying `‖R‖∞ / √ESS`.
    pub penalty_factor: f64,
    /// `‖R‖∞`, an a-priori bound on absolute trajectory returns.
    pub return_bound: f64,
    /// Confidence δ of the concentration-bound form of the penalty.
    pub confidence: f64,
}

impl SurrogateConfig {
    pub fn new(noise: EvalNoise, return_bound: f64) -> Self {
        Self {
            noise,
            normalization: Normalization::SelfNormalized,
            penalty_factor: 0.05,
            return_bound,
            confidence: 0.5,
        }
    }

    pub fn with_penalty(mut self, penalty_factor: f64) -> Self {
        self.penalty_factor = penalty_factor;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    /// Replaces γ by `√((1−δ)/δ)`, the factor of the high-probability lower bound.
    pub fn with_confidence(mut self, confidence: f64) -> Result<Self> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::Config(format!("confidence must lie in (0, 1), got {confidence}")));
        }
        self.confidence = confidence;
        self.penalty_factor = confidence_penalty_factor(confidence);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_factor >= 0.0) || !self.penalty_factor.is_finite() {
            return Err(Error::Config(format!("penalty factor must be nonnegative, got {}", self.penalty_factor)));
        }
        if !(self.return_bound > 0.0) || !self.return_bound.is_finite() {
            return Err(Error::Config(format!("return bound must be positive, got {}", self.return_bound)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }
}

/// `√((1−δ)/δ)`.
pub fn confidence_penalty_factor(confidence: f64) -> f64 {
    ((1.0 - confidence) / confidence).sqrt()
}

/// Arithmetic mean of sampled returns.
pub fn mc_return(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::Empty("mc_return"));
    }
    Ok(returns.iter().sum::<f64>() / returns.len() as f64)
}

/// `1 / Σ w̄ᵢ²` on weights normalized to sum to one, so the result lies in
/// `[1, N]`. Returns 0 when every log-weight is `-∞` (no support).
pub fn effective_sample_size(log_weights: &[f64]) -> Result<f64> {
    if log_weights.is_empty() {
        return Err(Error::Empty("effective_sample_size"));
    }
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::NonFinite("effective_sample_size"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let scaled: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let sum: f64 = scaled.iter().sum();
    let sum_sq: f64 = scaled.iter().map(|w| w * w).sum();
    Ok(sum * sum / sum_sq)
}

/// `−‖R‖∞ · γ / √ESS`. Zero support gives `-∞` unless γ = 0.
pub fn penalty(ess: f64, cfg: &SurrogateConfig) -> f64 {
    if cfg.penalty_factor == 0.0 {
        return 0.0;
    }
    if ess <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -cfg.return_bound * cfg.penalty_factor / ess.sqrt()
}
