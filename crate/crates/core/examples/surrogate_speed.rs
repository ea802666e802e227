//! Times surrogate evaluations (value + gradient) on a cartpole-sized support.
//!
//! `cargo run --release --example surrogate_speed`

use std::time::Instant;

use ddopg::envs::{CartPole, Environment};
use ddopg::estimators::{SupportSet, SurrogateConfig, SurrogateModel};
use ddopg::numkit::{MlpSpec, Rng};
use ddopg::policy::{EvalNoise, PolicyParams};
use ddopg::rollout::{collect, Trajectory};

fn main() -> ddopg::Result<()> {
    let env = CartPole::new();
    let spec = MlpSpec::default_policy(4, 1);
    let mut rng = Rng::new(7, 0);
    let mut pairs: Vec<(Trajectory, PolicyParams)> = Vec::new();
    while pairs.len() < 30 {
        // scaled-down random policies survive long enough to give full-length rollouts
        let theta = spec.init_params(&mut rng).iter().map(|w| 0.05 * w).collect();
        let params = PolicyParams::new(spec.clone(), theta)?;
        pairs.push((collect(&env, &params, &mut rng, 0.99)?, params));
    }
    let states: usize = pairs.iter().map(|(t, _)| t.len()).sum();
    let noise = EvalNoise::isotropic(1, 3.0)?;
    let support = SupportSet::from_pairs(&pairs, &noise)?;
    let cfg = SurrogateConfig::new(noise, env.max_return());
    let mut model = SurrogateModel::new(&support, &cfg)?;
    let target = pairs[0].1.theta().to_vec();
    let reps = 200;
    let start = Instant::now();
    let mut acc = 0.0;
    for _ in 0..reps {
        acc += model.evaluate(&target, true)?.objective;
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{reps} evaluations over {states} states: {:.3} s ({:.2} us per state), checksum {acc:.6}",
        secs,
        1e6 * secs / (reps * states) as f64
    );
    Ok(())
}
