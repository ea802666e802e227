//! Trains DD-OPG on cartpole with the default hyperparameters and prints
//! progress every few iterations.
//!
//! `cargo run --release --example cartpole_ddopg -- [seed] [max_steps]`

use std::time::Instant;

use ddopg::agents::{DdopgAgent, DdopgConfig};
use ddopg::envs::CartPole;

fn main() -> ddopg::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(404, |s| s.parse().expect("seed"));
    let max_steps: u64 = args.next().map_or(20_000, |s| s.parse().expect("max_steps"));

    let env = CartPole::new();
    let mut agent = DdopgAgent::new(&env, DdopgConfig::default(), seed)?;
    let start = Instant::now();
    let mut recent = Vec::new();
    println!("iter   steps  return  avg10  support  inner    ess  objective");
    while agent.steps() < max_steps {
        let s = agent.step()?;
        recent.push(s.ret);
        let window = &recent[recent.len().saturating_sub(10)..];
        let avg = window.iter().sum::<f64>() / window.len() as f64;
        if s.iteration % 25 == 1 {
            println!(
                "{:4} {:7} {:7.1} {:6.1} {:8} {:6} {:6.2} {:9.3}  ({:.1}s)",
                s.iteration,
                s.steps,
                s.ret,
                avg,
                s.support_distinct,
                s.inner.iterations,
                s.inner.best_ess,
                s.inner.best_objective,
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
