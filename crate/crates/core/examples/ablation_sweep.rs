//! Hyperparameter sweep on cartpole: runs every variant of the sweep over
//! three seeds and prints the median area under the learning curve.
//!
//! `cargo run --release --example ablation_sweep -- [sweep] [max_steps]`
//! where `sweep` is history, lengthscale, temperature or inner-steps.

use std::collections::BTreeMap;

use ddopg::harness::{median, run_ablation, ExperimentConfig, Sweep};

fn main() -> ddopg::Result<()> {
    let mut args = std::env::args().skip(1);
    let sweep: Sweep = args.next().as_deref().unwrap_or("lengthscale").parse()?;
    let max_steps: u64 = args.next().map_or(10_000, |s| s.parse().expect("max_steps"));

    let mut cfg = ExperimentConfig {
        seeds: vec![404, 931, 159],
        out: format!("runs/ablation_{sweep}").into(),
        ..Default::default()
    };
    cfg.ddopg.budget.max_steps = max_steps;

    let mut by_variant: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in run_ablation(&cfg, sweep)? {
        by_variant.entry(row.variant).or_default().push(row.auc / max_steps as f64);
    }
    println!("{sweep} sweep, {max_steps} steps, median mean-return over the run");
    for (variant, aucs) in by_variant {
        println!("  {variant:<22} {:6.2}", median(&aucs).unwrap_or(f64::NAN));
    }
    Ok(())
}
