//! Command-line front end: `benchmark`, `ablation` and `selftest`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddopg::harness::{
    run_ablation, run_benchmark, selftest, ConfigMap, ExperimentConfig, Sweep, ABLATION_STEPS,
};

#[derive(Parser)]
#[command(name = "ddopg", version, about = "Deterministic off-policy policy gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the listed agents on every seed and write curves plus a summary.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Comma-separated agents (ddopg, reinforce).
        #[arg(long)]
        agents: Option<String>,
    },
    /// Sweep one DD-OPG hyperparameter and report the area under each curve.
    Ablation {
        #[command(flatten)]
        common: Common,
        /// history, lengthscale, temperature or inner-steps.
        #[arg(long)]
        sweep: Sweep,
    },
    /// Fast numerical self-checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// key=value config file, applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated integer seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Environment-step budget per run.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` override; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self, defaults: &[(&str, String)], extra: &[(&str, Option<String>)]) -> ddopg::Result<ExperimentConfig> {
        let mut map = ConfigMap::new();
        for (k, v) in defaults {
            map.set(k, v)?;
        }
        if let Some(path) = &self.config {
            map.merge_text(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("env", self.env.clone()),
            ("seeds", self.seeds.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("budget.max_steps", self.max_steps.map(|s| s.to_string())),
            ("threads", self.threads.map(|t| t.to_string())),
        ];
        for (k, v) in flags.iter().chain(extra) {
            if let Some(v) = v {
                map.set(k, v)?;
            }
        }
        for assignment in &self.set {
            map.set_assignment(assignment)?;
        }
        ExperimentConfig::from_map(&map)
    }
}

fn run(cli: Cli) -> ddopg::Result<bool> {
    match cli.command {
        Command::Benchmark { common, agents } => {
            let cfg = common.resolve(&[], &[("agents", agents)])?;
            let runs = run_benchmark(&cfg)?;
            for r in &runs {
                let final_ret = r.curve.final_return().unwrap_or(f64::NAN);
                println!("{:<10} seed {:>5}: {:>7} steps, final return {final_ret:.1}", r.label, r.seed, r.curve.total_steps());
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Ablation { common, sweep } => {
            let defaults = [
                ("seeds", "404,931,159".to_string()),
                ("agents", "ddopg".to_string()),
                ("budget.max_steps", ABLATION_STEPS.to_string()),
            ];
            let cfg = common.resolve(&defaults, &[])?;
            for r in run_ablation(&cfg, sweep)? {
                println!("{:<22} seed {:>5}: auc {:.4e}, final return {:.1}", r.variant, r.seed, r.auc, r.final_return);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Selftest => {
            let mut ok = true;
            for c in selftest() {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
