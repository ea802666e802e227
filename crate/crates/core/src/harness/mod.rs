//! Experiment campaigns: multi-seed benchmarks, hyperparameter sweeps and
//! the quick self-test behind the `ddopg` binary.
//!
//! A benchmark writes into its output directory
//!
//! - `<agent>_seed<seed>.csv`: one learning curve per run (`iteration,steps,return,seconds`);
//! - `summary.csv`: `agent,steps,mean,std,runs` on a common step grid;
//! - `manifest.txt`: crate version, command, and every resolved config key.
//!
//! Ablations write `<variant>_seed<seed>.csv`, `ablation.csv` with one
//! `variant,seed,auc,final_return,steps` row per run, `ablation_summary.csv`
//! with the per-variant median and mean AUC, and the manifest.

mod config;
mod selftest;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

pub use config::{AgentKind, ConfigMap, ExperimentConfig, DEFAULT_SEEDS};
pub use selftest::{selftest, CheckResult};

use crate::agents::{ddopg_run, reinforce_run, DdopgConfig};
use crate::curve::LearningCurve;
use crate::envs::make_env;
use crate::error::{Error, Result};
use crate::optim::InnerLoopConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Step horizon of the ablation AUC.
pub const ABLATION_STEPS: u64 = 50_000;

/// One finished (agent, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub curve: LearningCurve,
}

pub fn run_agent(kind: AgentKind, cfg: &ExperimentConfig, seed: u64) -> Result<LearningCurve> {
    let env = make_env(&cfg.env)?;
    match kind {
        AgentKind::Ddopg => ddopg_run(env.as_ref(), &cfg.ddopg, seed),
        AgentKind::Reinforce => reinforce_run(env.as_ref(), &cfg.reinforce, seed),
    }
}

/// Runs `jobs` on a pool of `threads` workers (0 = rayon default) and keeps
/// the input order, so output never depends on scheduling.
fn run_parallel<J, F>(threads: usize, jobs: Vec<J>, f: F) -> Result<Vec<RunRecord>>
where
    J: Send,
    F: Fn(J) -> Result<RunRecord> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(&f).collect())
}

/// Common step grid `0, Δ, .., max_steps` with `points` entries.
pub fn step_grid(max_steps: u64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|k| max_steps as f64 * k as f64 / (points - 1) as f64).collect()
}

/// Mean and sample standard deviation (n − 1; 0 for a single run) of the
/// interpolated returns at each grid step.
pub fn summarize(curves: &[&LearningCurve], grid: &[f64]) -> Vec<(f64, f64, f64)> {
    grid.iter()
        .map(|&step| {
            let vals: Vec<f64> = curves.iter().filter_map(|c| c.return_at(step)).collect();
            let n = vals.len() as f64;
            if vals.is_empty() {
                return (step, f64::NAN, f64::NAN);
            }
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            (step, mean, var.sqrt())
        })
        .collect()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

fn manifest(command: &str, cfg: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "ddopg_version={VERSION}").expect("string write");
    writeln!(out, "command={command}").expect("string write");
    for (k, v) in extra {
        writeln!(out, "{k}={v}").expect("string write");
    }
    out.push_str(&cfg.to_map().to_text());
    out
}

fn write_curves(dir: &Path, runs: &[RunRecord]) -> Result<()> {
    for r in runs {
        fs::write(dir.join(format!("{}_seed{}.csv", r.label, r.seed)), r.curve.to_csv())?;
    }
    Ok(())
}

/// Runs every (agent, seed) pair of `cfg` and writes curves, summary and
/// manifest into `cfg.out`.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let jobs: Vec<(AgentKind, u64)> =
        cfg.agents.iter().flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s))).collect();
    let runs = run_parallel(cfg.threads, jobs, |(agent, seed)| {
        Ok(RunRecord { label: agent.to_string(), seed, curve: run_agent(agent, cfg, seed)? })
    })?;

    fs::create_dir_all(&cfg.out)?;
    write_curves(&cfg.out, &runs)?;
    let max_steps = cfg.ddopg.budget.max_steps.max(cfg.reinforce.budget.max_steps);
    let grid = step_grid(max_steps, cfg.grid_points);
    let mut summary = String::from("agent,steps,mean,std,runs\n");
    for agent in &cfg.agents {
        let curves: Vec<&LearningCurve> =
            runs.iter().filter(|r| r.label == agent.to_string()).map(|r| &r.curve).collect();
        for (step, mean, std) in summarize(&curves, &grid) {
            writeln!(summary, "{agent},{step},{mean},{std},{}", curves.len()).expect("string write");
        }
    }
    fs::write(cfg.out.join("summary.csv"), summary)?;
    fs::write(cfg.out.join("manifest.txt"), manifest("benchmark", cfg, &[]))?;
    Ok(runs)
}

/// Hyperparameter sweeps of DD-OPG on the configured environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Replay selection size N_max ∈ {5, 20, 50}.
    History,
    /// Evaluation log-variance ∈ {1, 2, 3, 4}.
    Lengthscale,
    /// Softmax temperature λ ∈ {0.01, 0.05, 0.1, 0.5, 1, 2}.
    Temperature,
    /// One Adam step per iteration against full inner optimization, each at N_max ∈ {5, 20, 50}.
    InnerSteps,
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "history" => Ok(Self::History),
            "lengthscale" => Ok(Self::Lengthscale),
            "temperature" => Ok(Self::Temperature),
            "inner-steps" | "inner_steps" => Ok(Self::InnerSteps),
            other => Err(Error::Config(format!(
                "unknown sweep '{other}' (expected history, lengthscale, temperature or inner-steps)"
            ))),
        }
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::History => "history",
            Self::Lengthscale => "lengthscale",
            Self::Temperature => "temperature",
            Self::InnerSteps => "inner-steps",
        })
    }
}

impl Sweep {
    /// Labelled DD-OPG configurations derived from `base`.
    pub fn variants(self, base: &DdopgConfig) -> Vec<(String, DdopgConfig)> {
        let with = |label: String, f: &dyn Fn(&mut DdopgConfig)| {
            let mut c = base.clone();
            f(&mut c);
            (label, c)
        };
        match self {
            Self::History => [5, 20, 50].map(|n| with(format!("n_max_{n}"), &|c| c.n_max = n)).to_vec(),
            Self::Lengthscale => {
                [1.0, 2.0, 3.0, 4.0].map(|lv| with(format!("log_var_{lv}"), &|c| c.log_var = lv)).to_vec()
            }
            Self::Temperature => [0.01, 0.05, 0.1, 0.5, 1.0, 2.0]
                .map(|t| with(format!("temperature_{t}"), &|c| c.temperature = t))
                .to_vec(),
            Self::InnerSteps => {
                let mut out = Vec::new();
                for (mode, inner) in [("full", base.inner.clone()), ("one_step", InnerLoopConfig::one_step())] {
                    for n in [5, 20, 50] {
                        out.push(with(format!("{mode}_n_max_{n}"), &|c| {
                            c.inner = inner.clone();
                            c.n_max = n;
                        }));
                    }
                }
                out
            }
        }
    }
}

/// Per-run ablation result.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub seed: u64,
    pub auc: f64,
    pub final_return: f64,
    pub steps: u64,
}

/// Runs every variant of `sweep` for every seed of `cfg`, computing the
/// area under the return curve over the step budget.
pub fn run_ablation(cfg: &ExperimentConfig, sweep: Sweep) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let variants = sweep.variants(&cfg.ddopg);
    for (_, v) in &variants {
        v.validate()?;
    }
    let horizon = cfg.ddopg.budget.max_steps;
    let jobs: Vec<(String, DdopgConfig, u64)> = variants
        .iter()
        .flat_map(|(label, v)| cfg.seeds.iter().map(move |&s| (label.clone(), v.clone(), s)))
        .collect();
    let runs = run_parallel(cfg.threads, jobs, |(label, ddopg, seed)| {
        let env = make_env(&cfg.env)?;
        Ok(RunRecord { label, seed, curve: ddopg_run(env.as_ref(), &ddopg, seed)? })
    })?;

    let rows: Vec<AblationRow> = runs
        .iter()
        .map(|r| AblationRow {
            variant: r.label.clone(),
            seed: r.seed,
            auc: r.curve.area_under(horizon).unwrap_or(0.0),
            final_return: r.curve.final_return().unwrap_or(f64::NAN),
            steps: r.curve.total_steps(),
        })
        .collect();

    fs::create_dir_all(&cfg.out)?;
    write_curves(&cfg.out, &runs)?;
    let mut table = String::from("variant,seed,auc,final_return,steps\n");
    for r in &rows {
        writeln!(table, "{},{},{},{},{}", r.variant, r.seed, r.auc, r.final_return, r.steps).expect("string write");
    }
    fs::write(cfg.out.join("ablation.csv"), table)?;
    let mut summary = String::from("variant,median_auc,mean_auc,runs\n");
    for (label, _) in &variants {
        let aucs: Vec<f64> = rows.iter().filter(|r| &r.variant == label).map(|r| r.auc).collect();
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        let med = median(&aucs).unwrap_or(f64::NAN);
        writeln!(summary, "{label},{med},{mean},{}", aucs.len()).expect("string write");
    }
    fs::write(cfg.out.join("ablation_summary.csv"), summary)?;
    let extra = [("sweep", sweep.to_string()), ("auc_horizon", horizon.to_string())];
    fs::write(cfg.out.join("manifest.txt"), manifest("ablation", cfg, &extra))?;
    Ok(rows)
}
