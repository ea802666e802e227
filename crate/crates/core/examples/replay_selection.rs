//! Softmax trajectory selection at several temperatures: selection
//! probabilities against empirical draw frequencies.
//!
//! `cargo run --release --example replay_selection`

use ddopg::envs::CartPole;
use ddopg::numkit::{MlpSpec, Rng};
use ddopg::policy::PolicyParams;
use ddopg::replay::ReplayBuffer;
use ddopg::rollout::collect;

fn main() -> ddopg::Result<()> {
    let env = CartPole::new();
    let spec = MlpSpec::default_policy(4, 1);
    let mut rng = Rng::new(3, 0);
    let mut stored = Vec::new();
    for _ in 0..6 {
        let p = PolicyParams::init(spec.clone(), &mut rng);
        stored.push((collect(&env, &p, &mut rng, 0.99)?, p));
    }
    for temperature in [0.01, 0.1, 1.0, 100.0] {
        let mut buffer = ReplayBuffer::new(temperature, 20)?;
        for (traj, p) in &stored {
            buffer.push(traj.clone(), p.clone());
        }
        let probs = buffer.selection_probs()?;
        let mut counts = vec![0usize; probs.len()];
        for _ in 0..2000 {
            for i in buffer.select(&mut rng)? {
                counts[i] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        println!("temperature {temperature}");
        for (i, (p, c)) in probs.iter().zip(&counts).enumerate() {
            let ret = buffer.entries()[i].trajectory.discounted_return();
            println!("  #{i} return {ret:7.3}  p = {p:.4}  drawn {:.4}", *c as f64 / total as f64);
        }
    }
    println!("(the newest trajectory, #5, is always part of a selection, so it is drawn more often than p)");
    Ok(())
}
