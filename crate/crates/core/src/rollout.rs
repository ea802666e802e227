//! Trajectory storage, rollout collection and return computations.

use crate::envs::Environment;
use crate::error::{check_dim, Error, Result};
use crate::numkit::{RealMat, Rng};
use crate::policy::{act, sample_action, EvalNoise, PolicyParams};

/// One recorded episode. Rows of `states` and `actions` are aligned with
/// `rewards`. See [`collect`] and [`collect_stochastic`] for which action
/// gets recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: RealMat,
    actions: RealMat,
    rewards: Vec<f64>,
    gamma: f64,
    discounted_return: f64,
    /// Index of the generating policy snapshot once stored in a replay buffer.
    pub behavior_id: Option<usize>,
}

impl Trajectory {
    pub fn new(states: RealMat, actions: RealMat, rewards: Vec<f64>, gamma: f64) -> Result<Self> {
        check_dim("trajectory actions", states.rows(), actions.rows())?;
        check_dim("trajectory rewards", states.rows(), rewards.len())?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount {gamma} outside [0, 1]")));
        }
        if states.as_slice().iter().chain(actions.as_slice()).chain(&rewards).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        let discounted_return = discounted_return(&rewards, gamma);
        Ok(Self {
            states,
            actions,
            rewards,
            gamma,
            discounted_return,
            behavior_id: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states.cols()
    }

    pub fn action_dim(&self) -> usize {
        self.actions.cols()
    }

    pub fn states(&self) -> &RealMat {
        &self.states
    }

    pub fn actions(&self) -> &RealMat {
        &self.actions
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Cached `Σ γᵗ r_t`.
    pub fn discounted_return(&self) -> f64 {
        self.discounted_return
    }

    /// Undiscounted `Σ r_t`, the quantity reported on learning curves.
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    // Horner form: r0 + γ(r1 + γ(r2 + ...))
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// `g_t = Σ_{k≥t} γ^{k−t} r_k`.
pub fn reward_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (g, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *g = acc;
    }
    out
}

/// Runs the deterministic policy until the episode ends. The recorded
/// actions are the ones the environment applied, i.e. clipped to its
/// bounds, so policies that differ only beyond saturation look alike to
/// the surrogate likelihood.
pub fn collect(env: &dyn Environment, params: &PolicyParams, rng: &mut Rng, gamma: f64) -> Result<Trajectory> {
    collect_with(env, params, rng, gamma, true, |state, _| act(params, state))
}

/// Rollout with Gaussian action noise `N(μ_θ(s), Σ)`, for the REINFORCE
/// baseline. Records the raw sampled actions, which the score function needs.
pub fn collect_stochastic(
    env: &dyn Environment,
    params: &PolicyParams,
    noise: &EvalNoise,
    rng: &mut Rng,
    gamma: f64,
) -> Result<Trajectory> {
    collect_with(env, params, rng, gamma, false, |state, rng| sample_action(params, noise, state, rng))
}

fn collect_with<F>(
    env: &dyn Environment,
    params: &PolicyParams,
    rng: &mut Rng,
    gamma: f64,
    store_applied: bool,
    mut policy: F,
) -> Result<Trajectory>
where
    F: FnMut(&[f64], &mut Rng) -> Result<Vec<f64>>,
{
    let spec = env.spec();
    check_dim("policy input", spec.state_dim, params.spec().input_dim())?;
    check_dim("policy output", spec.action_dim, params.spec().output_dim())?;
    let mut states = RealMat::with_cols(spec.state_dim);
    let mut actions = RealMat::with_cols(spec.action_dim);
    let mut rewards = Vec::with_capacity(spec.horizon);
    let mut state = env.reset(rng);
    while !state.done {
        let action = policy(&state.obs, rng)?;
        let tr = env.step(&state, &action)?;
        states.push_row(&state.obs)?;
        if store_applied {
            actions.push_row(&spec.clip(&action))?;
        } else {
            actions.push_row(&action)?;
        }
        rewards.push(tr.reward);
        state = tr.next;
    }
    let traj = Trajectory::new(states, actions, rewards, gamma)?;
    let bound = env.max_return();
    // the worst case can be attained exactly, so allow summation rounding
    let slack = bound * 1e-12;
    for value in [traj.discounted_return(), traj.total_reward()] {
        if value.abs() > bound + slack {
            return Err(Error::ReturnBound { value, bound });
        }
    }
    Ok(traj)
}
