//! Flat `key=value` configuration with dotted namespaces.
//!
//! ```text
//! # comments and blank lines are ignored
//! env=cartpole
//! agents=ddopg,reinforce
//! seeds=404,931,159
//! budget.max_steps=100000
//! agent.ddopg.temperature=0.1
//! agent.reinforce.step_size=0.03
//! ```
//!
//! Later assignments override earlier ones, so CLI `--set key=value` flags
//! applied after the file take precedence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agents::{Budget, DdopgConfig, ReinforceConfig};
use crate::envs::ENV_NAMES;
use crate::error::{Error, Result};
use crate::estimators::Normalization;
use crate::optim::InnerLoopConfig;

/// Seeds used when none are given.
pub const DEFAULT_SEEDS: [u64; 10] = [404, 931, 159, 380, 858, 708, 16, 448, 136, 989];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        map.merge_text(text)?;
        Ok(map)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.set_assignment(line).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, found '{assignment}'")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let valid = !key.is_empty()
            && key.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        if !valid {
            return Err(Error::Config(format!("invalid key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parse_into<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(raw) = self.get(key) {
            *slot = raw.parse().map_err(|_| Error::Config(format!("cannot parse {key}='{raw}'")))?;
        }
        Ok(())
    }

    fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.get(key) else { return Ok(None) };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Config(format!("cannot parse {key} entry '{s}'"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Sorted `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}={v}").expect("string write");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Ddopg,
    Reinforce,
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddopg" => Ok(Self::Ddopg),
            "reinforce" => Ok(Self::Reinforce),
            other => Err(Error::Config(format!("unknown agent '{other}' (expected ddopg or reinforce)"))),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ddopg => "ddopg",
            Self::Reinforce => "reinforce",
        })
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub ddopg: DdopgConfig,
    pub reinforce: ReinforceConfig,
    /// Worker threads for the seed pool; 0 lets the pool decide.
    pub threads: usize,
    /// Points on the common step grid of the summary CSV.
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "cartpole".into(),
            agents: vec![AgentKind::Ddopg, AgentKind::Reinforce],
            seeds: DEFAULT_SEEDS.to_vec(),
            out: PathBuf::from("runs"),
            ddopg: DdopgConfig::default(),
            reinforce: ReinforceConfig::default(),
            threads: 0,
            grid_points: 101,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "env",
    "agents",
    "seeds",
    "out",
    "threads",
    "summary.grid_points",
    "harness.wall_clock",
    "budget.max_steps",
    "budget.max_iterations",
    "budget.target_return",
    "budget.target_window",
    "agent.ddopg.temperature",
    "agent.ddopg.penalty",
    "agent.ddopg.log_var",
    "agent.ddopg.n_max",
    "agent.ddopg.gamma",
    "agent.ddopg.normalization",
    "agent.ddopg.hidden",
    "agent.ddopg.warmup_iterations",
    "agent.ddopg.warmup_inner_iters",
    "agent.ddopg.stall_jitter",
    "agent.ddopg.inner.max_iters",
    "agent.ddopg.inner.step_size",
    "agent.ddopg.inner.grad_tol",
    "agent.ddopg.inner.improve_tol",
    "agent.ddopg.inner.window",
    "agent.reinforce.batch_steps",
    "agent.reinforce.step_size",
    "agent.reinforce.log_var",
    "agent.reinforce.baseline",
    "agent.reinforce.gamma",
    "agent.reinforce.hidden",
];

impl ExperimentConfig {
    /// Defaults overridden by `map`. Unknown keys are rejected so typos
    /// do not silently fall back to defaults.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        if let Some(unknown) = map.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(Error::Config(format!("unknown config key '{unknown}'")));
        }
        let mut cfg = Self::default();
        map.parse_into("env", &mut cfg.env)?;
        if !ENV_NAMES.contains(&cfg.env.as_str()) {
            return Err(Error::Config(format!("unknown env '{}' (expected one of {})", cfg.env, ENV_NAMES.join(", "))));
        }
        if let Some(agents) = map.parse_list("agents")? {
            cfg.agents = agents;
        }
        if let Some(seeds) = map.parse_list("seeds")? {
            cfg.seeds = seeds;
        }
        if let Some(out) = map.get("out") {
            cfg.out = PathBuf::from(out);
        }
        map.parse_into("threads", &mut cfg.threads)?;
        map.parse_into("summary.grid_points", &mut cfg.grid_points)?;

        let mut budget = Budget::default();
        map.parse_into("budget.max_steps", &mut budget.max_steps)?;
        map.parse_into("budget.max_iterations", &mut budget.max_iterations)?;
        if let Some(raw) = map.get("budget.target_return") {
            budget.target_return = match raw {
                "" | "none" => None,
                v => Some(v.parse().map_err(|_| Error::Config(format!("cannot parse budget.target_return='{v}'")))?),
            };
        }
        map.parse_into("budget.target_window", &mut budget.target_window)?;
        let mut wall_clock = false;
        map.parse_into("harness.wall_clock", &mut wall_clock)?;

        let d = &mut cfg.ddopg;
        d.budget = budget.clone();
        d.wall_clock = wall_clock;
        map.parse_into("agent.ddopg.temperature", &mut d.temperature)?;
        map.parse_into("agent.ddopg.penalty", &mut d.penalty)?;
        map.parse_into("agent.ddopg.log_var", &mut d.log_var)?;
        map.parse_into("agent.ddopg.n_max", &mut d.n_max)?;
        map.parse_into("agent.ddopg.gamma", &mut d.gamma)?;
        map.parse_into::<Normalization>("agent.ddopg.normalization", &mut d.normalization)?;
        map.parse_into("agent.ddopg.warmup_iterations", &mut d.warmup_iterations)?;
        map.parse_into("agent.ddopg.warmup_inner_iters", &mut d.warmup_inner_iters)?;
        map.parse_into("agent.ddopg.stall_jitter", &mut d.stall_jitter)?;
        if let Some(hidden) = map.parse_list("agent.ddopg.hidden")? {
            d.hidden = hidden;
        }
        let inner: &mut InnerLoopConfig = &mut d.inner;
        map.parse_into("agent.ddopg.inner.max_iters", &mut inner.max_iters)?;
        map.parse_into("agent.ddopg.inner.step_size", &mut inner.step_size)?;
        map.parse_into("agent.ddopg.inner.grad_tol", &mut inner.grad_tol)?;
        map.parse_into("agent.ddopg.inner.improve_tol", &mut inner.improve_tol)?;
        map.parse_into("agent.ddopg.inner.window", &mut inner.window)?;

        let r = &mut cfg.reinforce;
        r.budget = budget;
        r.wall_clock = wall_clock;
        map.parse_into("agent.reinforce.batch_steps", &mut r.batch_steps)?;
        map.parse_into("agent.reinforce.step_size", &mut r.step_size)?;
        map.parse_into("agent.reinforce.log_var", &mut r.log_var)?;
        map.parse_into("agent.reinforce.baseline", &mut r.baseline)?;
        map.parse_into("agent.reinforce.gamma", &mut r.gamma)?;
        if let Some(hidden) = map.parse_list("agent.reinforce.hidden")? {
            r.hidden = hidden;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("agent list is empty".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("summary.grid_points must be at least 2".into()));
        }
        if self.ddopg.hidden.contains(&0) || self.reinforce.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        self.ddopg.validate()?;
        self.reinforce.validate()
    }

    /// Every resolved setting as a [`ConfigMap`], suitable for manifests and
    /// for feeding back into [`ExperimentConfig::from_map`].
    pub fn to_map(&self) -> ConfigMap {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let d = &self.ddopg;
        let r = &self.reinforce;
        let b = &d.budget;
        let pairs: Vec<(&str, String)> = vec![
            ("env", self.env.clone()),
            ("agents", list(&self.agents)),
            ("seeds", list(&self.seeds)),
            ("out", self.out.display().to_string()),
            ("threads", self.threads.to_string()),
            ("summary.grid_points", self.grid_points.to_string()),
            ("harness.wall_clock", d.wall_clock.to_string()),
            ("budget.max_steps", b.max_steps.to_string()),
            ("budget.max_iterations", b.max_iterations.to_string()),
            ("budget.target_return", b.target_return.map_or("none".into(), |t| t.to_string())),
            ("budget.target_window", b.target_window.to_string()),
            ("agent.ddopg.temperature", d.temperature.to_string()),
            ("agent.ddopg.penalty", d.penalty.to_string()),
            ("agent.ddopg.log_var", d.log_var.to_string()),
            ("agent.ddopg.n_max", d.n_max.to_string()),
            ("agent.ddopg.gamma", d.gamma.to_string()),
            ("agent.ddopg.normalization", d.normalization.to_string()),
            ("agent.ddopg.hidden", list(&d.hidden)),
            ("agent.ddopg.warmup_iterations", d.warmup_iterations.to_string()),
            ("agent.ddopg.warmup_inner_iters", d.warmup_inner_iters.to_string()),
            ("agent.ddopg.stall_jitter", d.stall_jitter.to_string()),
            ("agent.ddopg.inner.max_iters", d.inner.max_iters.to_string()),
            ("agent.ddopg.inner.step_size", d.inner.step_size.to_string()),
            ("agent.ddopg.inner.grad_tol", d.inner.grad_tol.to_string()),
            ("agent.ddopg.inner.improve_tol", d.inner.improve_tol.to_string()),
            ("agent.ddopg.inner.window", d.inner.window.to_string()),
            ("agent.reinforce.batch_steps", r.batch_steps.to_string()),
            ("agent.reinforce.step_size", r.step_size.to_string()),
            ("agent.reinforce.log_var", r.log_var.to_string()),
            ("agent.reinforce.baseline", r.baseline.to_string()),
            ("agent.reinforce.gamma", r.gamma.to_string()),
            ("agent.reinforce.hidden", list(&r.hidden)),
        ];
        let mut map = ConfigMap::new();
        for (k, v) in pairs {
            map.set(k, &v).expect("known keys are valid");
        }
        map
    }
}
