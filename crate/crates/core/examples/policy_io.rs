//! Trains a short DD-OPG run, saves the policy and one trajectory as text,
//! reloads both and checks that the reloaded policy reproduces the rollout.
//!
//! `cargo run --release --example policy_io -- [dir]`

use std::path::PathBuf;

use ddopg::agents::{DdopgAgent, DdopgConfig};
use ddopg::envs::CartPole;
use ddopg::numkit::Rng;
use ddopg::records::{load_policy, save_policy, trajectory_from_str, trajectory_to_string};
use ddopg::rollout::collect;

fn main() -> ddopg::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("ddopg_policy_io"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;

    let env = CartPole::new();
    let mut agent = DdopgAgent::new(&env, DdopgConfig::default(), 931)?;
    while agent.iteration() < 30 {
        agent.step()?;
    }
    let path = dir.join("policy.txt");
    save_policy(agent.params(), &path)?;
    let loaded = load_policy(&path)?;
    println!("saved {} parameters to {}", loaded.len(), path.display());
    println!("bit-exact round trip: {}", loaded.theta() == agent.params().theta());

    let a = collect(&env, agent.params(), &mut Rng::new(1, 0), 0.99)?;
    let b = collect(&env, &loaded, &mut Rng::new(1, 0), 0.99)?;
    let text = trajectory_to_string(&a);
    std::fs::write(dir.join("trajectory.txt"), &text)?;
    let back = trajectory_from_str(&text)?;
    println!("rollout return {} (reloaded policy: {})", a.total_reward(), b.total_reward());
    println!("trajectory round trip equal: {}", back == a);
    Ok(())
}
