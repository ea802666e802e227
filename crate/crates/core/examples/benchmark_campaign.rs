//! A small benchmark campaign through the library harness: both agents on
//! cartpole over three seeds, written to an output directory exactly as the
//! `ddopg benchmark` command does.
//!
//! `cargo run --release --example benchmark_campaign -- [out_dir] [max_steps]`

use ddopg::harness::{run_benchmark, AgentKind, ExperimentConfig};

fn main() -> ddopg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "runs/benchmark_example".into());
    let max_steps: u64 = args.next().map_or(20_000, |s| s.parse().expect("max_steps"));

    let mut cfg = ExperimentConfig {
        agents: vec![AgentKind::Ddopg, AgentKind::Reinforce],
        seeds: vec![404, 931, 159],
        out: out.into(),
        ..Default::default()
    };
    cfg.ddopg.budget.max_steps = max_steps;
    cfg.reinforce.budget.max_steps = max_steps;

    for run in run_benchmark(&cfg)? {
        let c = &run.curve;
        println!(
            "{:<10} seed {:>4}: {:>6} steps, best {:5.1}, final {:5.1}, first >= 80 at {:?}",
            run.label,
            run.seed,
            c.total_steps(),
            c.max_return().unwrap_or(f64::NAN),
            c.final_return().unwrap_or(f64::NAN),
            c.steps_to_reach(80.0)
        );
    }
    println!("curves, summary.csv and manifest.txt in {}", cfg.out.display());
    Ok(())
}
