//! The DD-OPG outer loop and the REINFORCE baseline.
//!
//! Both agents are steppable structs (one call = one policy update) so
//! examples and tests can inspect intermediate state; [`ddopg_run`] and
//! [`reinforce_run`] drive them to a step budget and return the curve.

use std::time::Instant;

use crate::curve::{CurveRow, LearningCurve};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::estimators::{
    reinforce_grad, Baseline, LogLikCache, Normalization, ReturnWeighting, SupportSet, SurrogateConfig,
};
use crate::numkit::{MlpSpec, Rng};
use crate::optim::{optimize_lower_bound, AdamState, InnerLoopConfig, InnerReport};
use crate::policy::{EvalNoise, PolicyParams};
use crate::replay::ReplayBuffer;
use crate::rollout::{collect, collect_stochastic, Trajectory};

// independent random streams derived from the run seed
const STREAM_INIT: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_SELECT: u64 = 2;
const STREAM_EXPLORE: u64 = 3;
const STREAM_JITTER: u64 = 4;

/// Stop conditions shared by both agents. A run ends after `max_iterations`
/// updates or once cumulative environment steps reach `max_steps`,
/// whichever comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_steps: u64,
    /// End the run once the mean of the last `target_window` reported
    /// returns reaches this.
    pub target_return: Option<f64>,
    pub target_window: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_iterations: usize::MAX, max_steps: 100_000, target_return: None, target_window: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdopgConfig {
    /// Softmax temperature λ of the replay selection.
    pub temperature: f64,
    /// ESS penalty factor γ.
    pub penalty: f64,
    /// Evaluation log-variance per action dimension (log Σ = value · I).
    pub log_var: f64,
    /// Replay selection size N_max.
    pub n_max: usize,
    pub gamma: f64,
    pub normalization: Normalization,
    pub inner: InnerLoopConfig,
    /// The first `warmup_iterations` updates use at most `warmup_inner_iters` Adam steps.
    pub warmup_iterations: usize,
    pub warmup_inner_iters: usize,
    pub hidden: Vec<usize>,
    /// Standard deviation of the Gaussian parameter jitter applied when an
    /// update leaves θ unchanged although the support returns differ
    /// (0 disables it). With every snapshot equal to θ each trajectory score
    /// vanishes, so the surrogate is stationary there and only a
    /// perturbation can leave it.
    pub stall_jitter: f64,
    pub budget: Budget,
    /// Record wall-clock seconds in the curve (breaks byte-identical output).
    pub wall_clock: bool,
}

impl Default for DdopgConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            penalty: 0.05,
            log_var: 3.0,
            n_max: 50,
            gamma: 0.99,
            normalization: Normalization::SelfNormalized,
            inner: InnerLoopConfig::default(),
            warmup_iterations: 5,
            warmup_inner_iters: 10,
            hidden: vec![32, 32],
            stall_jitter: 0.05,
            budget: Budget::default(),
            wall_clock: false,
        }
    }
}

impl DdopgConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.temperature, self.gamma];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.penalty >= 0.0) || !self.log_var.is_finite() {
            return Err(Error::Config("ddopg temperature and discount must be positive, penalty nonnegative".into()));
        }
        if !(self.stall_jitter >= 0.0) {
            return Err(Error::Config("ddopg stall_jitter must be nonnegative".into()));
        }
        if self.gamma > 1.0 || self.n_max == 0 || self.warmup_inner_iters == 0 {
            return Err(Error::Config("ddopg needs gamma <= 1, n_max >= 1 and warmup_inner_iters >= 1".into()));
        }
        self.inner.validate()
    }
}

/// What one DD-OPG iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct DdopgStep {
    pub iteration: usize,
    pub steps: u64,
    /// Undiscounted total reward of this iteration's rollout.
    pub ret: f64,
    pub discounted_return: f64,
    pub support_distinct: usize,
    pub inner: InnerReport,
    /// Whether the stall jitter was applied after the inner loop.
    pub jittered: bool,
}

#[derive(Debug)]
pub struct DdopgAgent<'e> {
    env: &'e dyn Environment,
    cfg: DdopgConfig,
    surrogate: SurrogateConfig,
    params: PolicyParams,
    buffer: ReplayBuffer,
    cache: LogLikCache,
    env_rng: Rng,
    select_rng: Rng,
    jitter_rng: Rng,
    iteration: usize,
    steps: u64,
}

impl<'e> DdopgAgent<'e> {
    pub fn new(env: &'e dyn Environment, cfg: DdopgConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let spec = env.spec();
        let mlp = MlpSpec::new(spec.state_dim, cfg.hidden.clone(), spec.action_dim)?;
        let params = PolicyParams::init(mlp, &mut Rng::new(seed, STREAM_INIT));
        let noise = EvalNoise::isotropic(spec.action_dim, cfg.log_var)?;
        let surrogate = SurrogateConfig::new(noise, env.max_return())
            .with_penalty(cfg.penalty)
            .with_normalization(cfg.normalization);
        surrogate.validate()?;
        Ok(Self {
            env,
            buffer: ReplayBuffer::new(cfg.temperature, cfg.n_max)?,
            cfg,
            surrogate,
            params,
            cache: LogLikCache::new(),
            env_rng: Rng::new(seed, STREAM_ENV),
            select_rng: Rng::new(seed, STREAM_SELECT),
            jitter_rng: Rng::new(seed, STREAM_JITTER),
            iteration: 0,
            steps: 0,
        })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn surrogate_config(&self) -> &SurrogateConfig {
        &self.surrogate
    }

    /// Rollout with the current policy, buffer push, replay selection, and
    /// inner optimization of the penalized surrogate.
    pub fn step(&mut self) -> Result<DdopgStep> {
        let traj = collect(self.env, &self.params, &mut self.env_rng, self.cfg.gamma)?;
        self.steps += traj.len() as u64;
        let (ret, discounted) = (traj.total_reward(), traj.discounted_return());
        self.buffer.push(traj, self.params.clone());

        let indices = self.buffer.select(&mut self.select_rng)?;
        let support = SupportSet::from_buffer(&self.buffer, &indices, &self.surrogate.noise, &mut self.cache)?;
        let mut inner = self.cfg.inner.clone();
        if self.iteration < self.cfg.warmup_iterations {
            inner.max_iters = inner.max_iters.min(self.cfg.warmup_inner_iters);
        }
        let (mut next, report) = optimize_lower_bound(&self.params, &support, &self.surrogate, &inner)?;
        // with equal support returns there is nothing to learn, so staying put is right
        let returns = support.returns();
        let spread = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - returns.iter().copied().fold(f64::INFINITY, f64::min);
        let jittered = self.cfg.stall_jitter > 0.0 && spread > 0.0 && next.theta() == self.params.theta();
        if jittered {
            let theta = next.theta().iter().map(|t| t + self.cfg.stall_jitter * self.jitter_rng.normal()).collect();
            next = next.with_theta(theta)?;
        }
        self.params = next;
        self.iteration += 1;
        Ok(DdopgStep {
            iteration: self.iteration,
            steps: self.steps,
            ret,
            discounted_return: discounted,
            support_distinct: support.distinct_len(),
            inner: report,
            jittered,
        })
    }
}

/// Trains DD-OPG on `env` until the budget in `cfg` is exhausted.
pub fn ddopg_run(env: &dyn Environment, cfg: &DdopgConfig, seed: u64) -> Result<LearningCurve> {
    let mut agent = DdopgAgent::new(env, cfg.clone(), seed)?;
    drive(&cfg.budget, cfg.wall_clock, || {
        let s = agent.step()?;
        Ok((s.iteration, s.steps, s.ret))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforceConfig {
    /// Environment steps per update; converted to `⌈batch_steps / H⌉` episodes.
    pub batch_steps: usize,
    pub step_size: f64,
    /// Fixed exploration log-variance per action dimension.
    pub log_var: f64,
    pub baseline: bool,
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub budget: Budget,
    pub wall_clock: bool,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            batch_steps: 5000,
            step_size: 0.03,
            log_var: 0.0,
            baseline: true,
            gamma: 0.99,
            hidden: vec![32, 32],
            budget: Budget::default(),
            wall_clock: false,
        }
    }
}

impl ReinforceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_steps == 0 || !(self.step_size >= 0.0) || !self.log_var.is_finite() {
            return Err(Error::Config("reinforce needs batch_steps >= 1 and a nonnegative step size".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("reinforce discount must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn episodes_per_batch(&self, horizon: usize) -> usize {
        self.batch_steps.div_ceil(horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforceStep {
    pub iteration: usize,
    pub steps: u64,
    /// Batch-mean undiscounted total reward.
    pub ret: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug)]
pub struct ReinforceAgent<'e> {
    env: &'e dyn Environment,
    cfg: ReinforceConfig,
    noise: EvalNoise,
    params: PolicyParams,
    adam: AdamState,
    rng: Rng,
    batch: Vec<Trajectory>,
    iteration: usize,
    steps: u64,
}

impl<'e> ReinforceAgent<'e> {
    pub fn new(env: &'e dyn Environment, cfg: ReinforceConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let spec = env.spec();
        let mlp = MlpSpec::new(spec.state_dim, cfg.hidden.clone(), spec.action_dim)?;
        let params = PolicyParams::init(mlp, &mut Rng::new(seed, STREAM_INIT));
        Ok(Self {
            env,
            noise: EvalNoise::isotropic(spec.action_dim, cfg.log_var)?,
            adam: AdamState::new(params.len(), cfg.step_size),
            params,
            cfg,
            rng: Rng::new(seed, STREAM_EXPLORE),
            batch: Vec::new(),
            iteration: 0,
            steps: 0,
        })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn noise(&self) -> &EvalNoise {
        &self.noise
    }

    /// The episodes used by the most recent update.
    pub fn last_batch(&self) -> &[Trajectory] {
        &self.batch
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn baseline(&self) -> Baseline {
        if self.cfg.baseline {
            Baseline::LinearFeature { horizon: self.env.spec().horizon }
        } else {
            Baseline::None
        }
    }

    /// Collects a batch of noisy episodes and takes one Adam ascent step.
    pub fn step(&mut self) -> Result<ReinforceStep> {
        let episodes = self.cfg.episodes_per_batch(self.env.spec().horizon);
        self.batch.clear();
        for _ in 0..episodes {
            let traj = collect_stochastic(self.env, &self.params, &self.noise, &mut self.rng, self.cfg.gamma)?;
            self.steps += traj.len() as u64;
            self.batch.push(traj);
        }
        let ret = self.batch.iter().map(Trajectory::total_reward).sum::<f64>() / episodes as f64;
        let grad = reinforce_grad(&self.batch, &self.params, &self.noise, self.baseline(), ReturnWeighting::RewardToGo)?;
        let mut theta = self.params.theta().to_vec();
        self.adam.step(&mut theta, &grad)?;
        self.params = self.params.with_theta(theta)?;
        self.iteration += 1;
        Ok(ReinforceStep { iteration: self.iteration, steps: self.steps, ret, grad })
    }
}

/// Trains the REINFORCE baseline on `env` until the budget in `cfg` is exhausted.
pub fn reinforce_run(env: &dyn Environment, cfg: &ReinforceConfig, seed: u64) -> Result<LearningCurve> {
    let mut agent = ReinforceAgent::new(env, cfg.clone(), seed)?;
    drive(&cfg.budget, cfg.wall_clock, || {
        let s = agent.step()?;
        Ok((s.iteration, s.steps, s.ret))
    })
}

fn drive(budget: &Budget, wall_clock: bool, mut step: impl FnMut() -> Result<(usize, u64, f64)>) -> Result<LearningCurve> {
    let start = Instant::now();
    let mut curve = LearningCurve::new();
    while curve.len() < budget.max_iterations && curve.total_steps() < budget.max_steps {
        let (iteration, steps, ret) = step()?;
        let seconds = if wall_clock { start.elapsed().as_secs_f64() } else { 0.0 };
        curve.push(CurveRow { iteration, steps, ret, seconds })?;
        if let Some(target) = budget.target_return {
            let w = budget.target_window.max(1);
            if curve.len() >= w && trailing_mean(&curve, w) >= target {
                break;
            }
        }
    }
    Ok(curve)
}

/// Mean return of the last `window` rows (all rows if there are fewer).
pub fn trailing_mean(curve: &LearningCurve, window: usize) -> f64 {
    let rows = curve.rows();
    let tail = &rows[rows.len().saturating_sub(window.max(1))..];
    tail.iter().map(|r| r.ret).sum::<f64>() / tail.len() as f64
}
