//! Trains the REINFORCE baseline on cartpole and prints the batch-mean
//! return after every update.
//!
//! `cargo run --release --example cartpole_reinforce -- [seed] [max_steps]`

use ddopg::agents::{ReinforceAgent, ReinforceConfig};
use ddopg::envs::CartPole;

fn main() -> ddopg::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(404, |s| s.parse().expect("seed"));
    let max_steps: u64 = args.next().map_or(100_000, |s| s.parse().expect("max_steps"));

    let env = CartPole::new();
    let mut agent = ReinforceAgent::new(&env, ReinforceConfig::default(), seed)?;
    println!("iter   steps  batch mean return");
    while agent.steps() < max_steps {
        let s = agent.step()?;
        println!("{:4} {:7} {:8.2}", s.iteration, s.steps, s.ret);
    }
    Ok(())
}
