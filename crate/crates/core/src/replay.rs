//! Per-trajectory replay buffer with softmax-prioritized selection.
//!
//! Selection probabilities are `exp(R̃ᵢ/λ) / Σⱼ exp(R̃ⱼ/λ)` where `R̃` are the
//! stored returns min-max normalized to `[0, 1]` over the current buffer
//! (all 0.5 when every return is equal).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::policy::PolicyParams;
use crate::rollout::Trajectory;

#[derive(Debug, Clone)]
pub struct ReplayEntry {
    pub trajectory: Arc<Trajectory>,
    pub snapshot: Arc<PolicyParams>,
    pub ret: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: Vec<ReplayEntry>,
    temperature: f64,
    n_max: usize,
}

impl ReplayBuffer {
    pub fn new(temperature: f64, n_max: usize) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
        }
        if n_max == 0 {
            return Err(Error::Config("N_max must be positive".into()));
        }
        Ok(Self {
            entries: Vec::new(),
            temperature,
            n_max,
        })
    }

    /// Stores the trajectory with an independent copy of its behavior policy
    /// and returns its index, which also becomes the trajectory's `behavior_id`.
    pub fn push(&mut self, mut trajectory: Trajectory, snapshot: PolicyParams) -> usize {
        let index = self.entries.len();
        trajectory.behavior_id = Some(index);
        let ret = trajectory.discounted_return();
        self.entries.push(ReplayEntry {
            trajectory: Arc::new(trajectory),
            snapshot: Arc::new(snapshot),
            ret,
        });
        index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&ReplayEntry> {
        self.entries.get(index)
    }

    pub fn returns(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.ret).collect()
    }

    pub fn normalized_returns(&self) -> Vec<f64> {
        normalize_returns(&self.returns())
    }

    pub fn selection_probs(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::Empty("selection_probs"));
        }
        Ok(softmax(&self.normalized_returns(), self.temperature))
    }

    /// Draws `N_max` indices i.i.d. with replacement from [`Self::selection_probs`].
    /// The newest trajectory always ends up in the selection: if no draw hit
    /// it, it replaces the last slot.
    pub fn select(&self, rng: &mut Rng) -> Result<Vec<usize>> {
        let probs = self.selection_probs()?;
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let total = acc;
        let mut picks: Vec<usize> = (0..self.n_max)
            .map(|_| {
                let u = rng.uniform() * total;
                cdf.partition_point(|&c| c <= u).min(probs.len() - 1)
            })
            .collect();
        let newest = self.len() - 1;
        if !picks.contains(&newest) {
            *picks.last_mut().expect("n_max > 0") = newest;
        }
        Ok(picks)
    }
}

/// Min-max normalization to `[0, 1]`; a constant input maps to 0.5 everywhere.
pub fn normalize_returns(returns: &[f64]) -> Vec<f64> {
    let lo = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; returns.len()];
    }
    returns.iter().map(|r| (r - lo) / (hi - lo)).collect()
}

/// `softmax(x/λ)` evaluated as `exp((xᵢ − max x)/λ)` so tiny temperatures
/// degrade to an argmax instead of overflowing.
pub fn softmax(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = values.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / z).collect()
}
