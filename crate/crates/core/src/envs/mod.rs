//! Benchmark environments with continuous actions.
//!
//! Every environment is a pure transition function over an explicit
//! [`EnvState`]; the only randomness is the initial-state draw in `reset`.

mod cartpole;
mod mountaincar;
mod pointmass;

pub use cartpole::CartPole;
pub use mountaincar::MountainCar;
pub use pointmass::PointMass;

use std::fmt::Debug;

use crate::error::{check_dim, Error, Result};
use crate::numkit::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub action_bounds: Vec<(f64, f64)>,
}

impl EnvSpec {
    pub fn clip(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(&self.action_bounds)
            .map(|(a, &(lo, hi))| a.clamp(lo, hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub obs: Vec<f64>,
    pub t: usize,
    pub done: bool,
}

impl EnvState {
    pub fn initial(obs: Vec<f64>) -> Self {
        Self {
            obs,
            t: 0,
            done: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: EnvState,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Debug + Send + Sync {
    fn spec(&self) -> &EnvSpec;

    fn reset(&self, rng: &mut Rng) -> EnvState;

    /// One deterministic step of the dynamics on an already clipped action.
    /// Returns the next observation, the reward and the terminal predicate.
    fn dynamics(&self, obs: &[f64], action: &[f64]) -> (Vec<f64>, f64, bool);

    /// Upper bound on `|R(τ)|` for any trajectory and any discount in `[0, 1]`.
    fn max_return(&self) -> f64;

    fn step(&self, state: &EnvState, action: &[f64]) -> Result<Transition> {
        let spec = self.spec();
        if state.done || state.t >= spec.horizon {
            return Err(Error::EpisodeDone);
        }
        check_dim("environment action", spec.action_dim, action.len())?;
        if action.iter().any(|a| a.is_nan()) {
            return Err(Error::NonFinite("environment action"));
        }
        let clipped = spec.clip(action);
        let (obs, reward, terminal) = self.dynamics(&state.obs, &clipped);
        let t = state.t + 1;
        let done = terminal || t >= spec.horizon;
        Ok(Transition {
            next: EnvState { obs, t, done },
            reward,
            done,
        })
    }
}

pub const ENV_NAMES: [&str; 3] = ["cartpole", "mountaincar", "pointmass"];

pub fn make_env(name: &str) -> Result<Box<dyn Environment>> {
    match name {
        "cartpole" => Ok(Box::new(CartPole::new())),
        "mountaincar" => Ok(Box::new(MountainCar::new())),
        "pointmass" => Ok(Box::new(PointMass::new())),
        other => Err(Error::Config(format!(
            "unknown environment '{other}' (expected one of {})",
            ENV_NAMES.join(", ")
        ))),
    }
}
