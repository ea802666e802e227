use std::collections::HashMap;
use std::sync::Arc;

use super::{penalty, Normalization, SurrogateConfig};
use crate::error::{check_dim, Error, Result};
use crate::numkit::{axpy, log_sum_exp_weighted, MlpSpec, RealMat};
use crate::policy::{EvalNoise, LogLikEvaluator, PolicyParams};
use crate::replay::ReplayBuffer;
use crate::rollout::Trajectory;

/// Cached behavior log-likelihoods `log p̃(τ_i | θ_j)` keyed by
/// (trajectory index, snapshot index) in a replay buffer. Changing the
/// evaluation covariance flushes the cache.
#[derive(Debug, Default, Clone)]
pub struct LogLikCache {
    log_var: Vec<f64>,
    values: HashMap<(usize, usize), f64>,
    misses: usize,
}

impl LogLikCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of pairs computed rather than served from the cache.
    pub fn misses(&self) -> usize {
        self.misses
    }

    pub fn get(&self, trajectory: usize, snapshot: usize) -> Option<f64> {
        self.values.get(&(trajectory, snapshot)).copied()
    }

    fn sync_noise(&mut self, noise: &EvalNoise) {
        if self.log_var != noise.log_var() {
            self.values.clear();
            self.log_var = noise.log_var().to_vec();
        }
    }
}

/// The trajectories entering one surrogate evaluation, with the mixture
/// denominators `log (1/N Σ_j p̃(τ_i | θ_j))` precomputed.
///
/// The support is a multiset: duplicated buffer indices are stored once with
/// a multiplicity, and `N` counts every copy.
#[derive(Debug, Clone)]
pub struct SupportSet {
    spec: MlpSpec,
    noise: EvalNoise,
    trajectories: Vec<Arc<Trajectory>>,
    returns: Vec<f64>,
    counts: Vec<f64>,
    positions: Vec<usize>,
    behavior_log_lik: RealMat,
    log_mixture: Vec<f64>,
}

impl SupportSet {
    /// Support over the buffer entries at `indices`, filling `cache` with any
    /// behavior log-likelihood pair it has not seen yet.
    pub fn from_buffer(
        buffer: &ReplayBuffer,
        indices: &[usize],
        noise: &EvalNoise,
        cache: &mut LogLikCache,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("support set"));
        }
        cache.sync_noise(noise);
        let mut distinct: Vec<usize> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        let mut positions = Vec::with_capacity(indices.len());
        for &i in indices {
            if buffer.get(i).is_none() {
                return Err(Error::Config(format!("support index {i} outside buffer of {}", buffer.len())));
            }
            match distinct.iter().position(|&d| d == i) {
                Some(k) => {
                    counts[k] += 1.0;
                    positions.push(k);
                }
                None => {
                    positions.push(distinct.len());
                    distinct.push(i);
                    counts.push(1.0);
                }
            }
        }
        let spec = buffer.get(distinct[0]).expect("checked").snapshot.spec().clone();
        let n = distinct.len();
        let mut behavior = RealMat::zeros(n, n);
        let mut evaluator = LogLikEvaluator::new(&spec, noise)?;
        for (col, &snap) in distinct.iter().enumerate() {
            let snapshot = &buffer.get(snap).expect("checked").snapshot;
            if snapshot.spec() != &spec {
                return Err(Error::Config("support snapshots disagree on network shape".into()));
            }
            for (row, &traj) in distinct.iter().enumerate() {
                let value = match cache.get(traj, snap) {
                    Some(v) => v,
                    None => {
                        let v = evaluator.log_lik(snapshot.theta(), &buffer.get(traj).expect("checked").trajectory)?;
                        cache.values.insert((traj, snap), v);
                        cache.misses += 1;
                        v
                    }
                };
                behavior.set(row, col, value);
            }
        }
        let trajectories: Vec<Arc<Trajectory>> =
            distinct.iter().map(|&i| buffer.get(i).expect("checked").trajectory.clone()).collect();
        let returns = distinct.iter().map(|&i| buffer.get(i).expect("checked").ret).collect();
        Self::assemble(spec, noise.clone(), trajectories, returns, counts, positions, behavior)
    }

    /// Support where every trajectory is paired with its own behavior policy,
    /// without a buffer or cache.
    pub fn from_pairs(pairs: &[(Trajectory, PolicyParams)], noise: &EvalNoise) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("support set"));
        }
        let spec = pairs[0].1.spec().clone();
        let n = pairs.len();
        let mut behavior = RealMat::zeros(n, n);
        let mut evaluator = LogLikEvaluator::new(&spec, noise)?;
        for (col, (_, params)) in pairs.iter().enumerate() {
            if params.spec() != &spec {
                return Err(Error::Config("support snapshots disagree on network shape".into()));
            }
            for (row, (traj, _)) in pairs.iter().enumerate() {
                behavior.set(row, col, evaluator.log_lik(params.theta(), traj)?);
            }
        }
        let trajectories = pairs.iter().map(|(t, _)| Arc::new(t.clone())).collect();
        let returns = pairs.iter().map(|(t, _)| t.discounted_return()).collect();
        Self::assemble(spec, noise.clone(), trajectories, returns, vec![1.0; n], (0..n).collect(), behavior)
    }

    fn assemble(
        spec: MlpSpec,
        noise: EvalNoise,
        trajectories: Vec<Arc<Trajectory>>,
        returns: Vec<f64>,
        counts: Vec<f64>,
        positions: Vec<usize>,
        behavior_log_lik: RealMat,
    ) -> Result<Self> {
        let total = positions.len() as f64;
        let log_mixture = (0..trajectories.len())
            .map(|row| Ok(log_sum_exp_weighted(behavior_log_lik.row(row), &counts)? - total.ln()))
            .collect::<Result<Vec<f64>>>()?;
        if log_mixture.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("surrogate mixture density"));
        }
        Ok(Self {
            spec,
            noise,
            trajectories,
            returns,
            counts,
            positions,
            behavior_log_lik,
            log_mixture,
        })
    }

    /// Multiset size `N`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distinct_len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn noise(&self) -> &EvalNoise {
        &self.noise
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Returns in multiset order.
    pub fn returns(&self) -> Vec<f64> {
        self.positions.iter().map(|&k| self.returns[k]).collect()
    }

    /// Applies `f` to every stored return.
    pub fn map_returns(&mut self, f: impl Fn(f64) -> f64) {
        self.returns.iter_mut().for_each(|r| *r = f(*r));
    }

    /// `log p̃(τ_i | θ_j)` over distinct trajectories (rows) and snapshots (columns).
    pub fn behavior_log_lik(&self) -> &RealMat {
        &self.behavior_log_lik
    }

    /// `log (1/N Σ_j p̃(τ_i | θ_j))` per distinct trajectory.
    pub fn log_mixture(&self) -> &[f64] {
        &self.log_mixture
    }
}

/// One evaluation of the surrogate at a parameter vector.
#[derive(Debug, Clone)]
pub struct SurrogateEval {
    /// `log w̃ᵢ` in multiset order.
    pub log_weights: Vec<f64>,
    pub value: f64,
    pub ess: f64,
    pub penalty: f64,
    /// `value + penalty`.
    pub objective: f64,
    /// False when every weight underflowed; `value` is then reported as 0.
    pub supported: bool,
    pub value_grad: Option<Vec<f64>>,
    pub objective_grad: Option<Vec<f64>>,
}

/// Evaluator bound to a support set and configuration; reuses scratch
/// buffers across calls, which is what the inner optimization loop needs.
#[derive(Debug)]
pub struct SurrogateModel<'a> {
    support: &'a SupportSet,
    cfg: &'a SurrogateConfig,
    evaluator: LogLikEvaluator,
    grads: Vec<Vec<f64>>,
}

impl<'a> SurrogateModel<'a> {
    pub fn new(support: &'a SupportSet, cfg: &'a SurrogateConfig) -> Result<Self> {
        cfg.validate()?;
        if support.noise != cfg.noise {
            return Err(Error::Config(
                "support set was built under a different evaluation covariance".into(),
            ));
        }
        let p = support.spec.param_count();
        Ok(Self {
            support,
            cfg,
            evaluator: LogLikEvaluator::new(&support.spec, &cfg.noise)?,
            grads: vec![vec![0.0; p]; support.distinct_len()],
        })
    }

    pub fn evaluate(&mut self, theta: &[f64], with_grad: bool) -> Result<SurrogateEval> {
        let s = self.support;
        check_dim("surrogate target parameters", s.spec.param_count(), theta.len())?;
        let n = s.len() as f64;
        let mut log_w = Vec::with_capacity(s.distinct_len());
        for (k, traj) in s.trajectories.iter().enumerate() {
            let ll = if with_grad {
                let g = &mut self.grads[k];
                g.iter_mut().for_each(|v| *v = 0.0);
                self.evaluator.log_lik_and_grad(theta, traj, 1.0, g)?
            } else {
                self.evaluator.log_lik(theta, traj)?
            };
            log_w.push(ll - s.log_mixture[k]);
        }
        let log_weights: Vec<f64> = s.positions.iter().map(|&k| log_w[k]).collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dim = theta.len();

        if max == f64::NEG_INFINITY {
            let pen = penalty(0.0, self.cfg);
            return Ok(SurrogateEval {
                log_weights,
                value: 0.0,
                ess: 0.0,
                penalty: pen,
                objective: pen,
                supported: false,
                value_grad: with_grad.then(|| vec![0.0; dim]),
                objective_grad: with_grad.then(|| vec![0.0; dim]),
            });
        }

        let scaled: Vec<f64> = log_w.iter().map(|w| (w - max).exp()).collect();
        let z: f64 = scaled.iter().zip(&s.counts).map(|(w, m)| m * w).sum();
        let z2: f64 = scaled.iter().zip(&s.counts).map(|(w, m)| m * w * w).sum();
        // normalized weight mass p_k and squared-weight mass q_k per distinct entry
        let p: Vec<f64> = scaled.iter().zip(&s.counts).map(|(w, m)| m * w / z).collect();
        let q: Vec<f64> = scaled.iter().zip(&s.counts).map(|(w, m)| m * w * w / z2).collect();
        let ess = z * z / z2;
        let pen = penalty(ess, self.cfg);

        let (value, value_coef): (f64, Vec<f64>) = match self.cfg.normalization {
            Normalization::SelfNormalized => {
                let j: f64 = p.iter().zip(&s.returns).map(|(pk, r)| pk * r).sum();
                let coef = p.iter().zip(&s.returns).map(|(pk, r)| pk * (r - j)).collect();
                (j, coef)
            }
            Normalization::PerCount => {
                let w: Vec<f64> = log_w.iter().map(|lw| lw.exp()).collect();
                let j = w.iter().zip(&s.counts).zip(&s.returns).map(|((w, m), r)| m * w * r).sum::<f64>() / n;
                let coef = w.iter().zip(&s.counts).zip(&s.returns).map(|((w, m), r)| m * w * r / n).collect();
                (j, coef)
            }
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("surrogate return"));
        }

        let (value_grad, objective_grad) = if with_grad {
            let mut vg = vec![0.0; dim];
            let mut og = vec![0.0; dim];
            let pen_scale = if self.cfg.penalty_factor == 0.0 {
                0.0
            } else {
                self.cfg.return_bound * self.cfg.penalty_factor / ess.sqrt()
            };
            for (k, g) in self.grads.iter().enumerate() {
                axpy(value_coef[k], g, &mut vg);
                axpy(value_coef[k] + pen_scale * (p[k] - q[k]), g, &mut og);
            }
            if og.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("surrogate gradient"));
            }
            (Some(vg), Some(og))
        } else {
            (None, None)
        };

        Ok(SurrogateEval {
            log_weights,
            value,
            ess,
            penalty: pen,
            objective: value + pen,
            supported: true,
            value_grad,
            objective_grad,
        })
    }
}

fn eval(support: &SupportSet, target: &PolicyParams, cfg: &SurrogateConfig, with_grad: bool) -> Result<SurrogateEval> {
    if target.spec() != support.spec() {
        return Err(Error::Config("target policy shape differs from support snapshots".into()));
    }
    SurrogateModel::new(support, cfg)?.evaluate(target.theta(), with_grad)
}

/// `log w̃ᵢ = log p̃(τᵢ|θ) − log(1/N Σⱼ p̃(τᵢ|θⱼ))`, in multiset order.
pub fn log_surrogate_weights(support: &SupportSet, target: &PolicyParams, cfg: &SurrogateConfig) -> Result<Vec<f64>> {
    Ok(eval(support, target, cfg, false)?.log_weights)
}

/// `(1/Z) Σ w̃ᵢ R(τᵢ)` with `Z` per the configured normalization.
pub fn surrogate_return(support: &SupportSet, target: &PolicyParams, cfg: &SurrogateConfig) -> Result<f64> {
    Ok(eval(support, target, cfg, false)?.value)
}

/// θ-gradient of [`surrogate_return`]. Self-normalized:
/// `Σ (w̃ᵢ/Z) ∇log p̃(τᵢ|θ) (R(τᵢ) − Ĵ)`; per-count: `(1/N) Σ w̃ᵢ ∇log p̃(τᵢ|θ) R(τᵢ)`.
pub fn surrogate_grad(support: &SupportSet, target: &PolicyParams, cfg: &SurrogateConfig) -> Result<Vec<f64>> {
    Ok(eval(support, target, cfg, true)?.value_grad.expect("requested"))
}

/// Surrogate return plus the ESS penalty.
pub fn lower_bound(support: &SupportSet, target: &PolicyParams, cfg: &SurrogateConfig) -> Result<f64> {
    Ok(eval(support, target, cfg, false)?.objective)
}
