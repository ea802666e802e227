//! How the evaluation lengthscale Σ moves the surrogate between the
//! on-policy Monte Carlo estimate (small Σ) and the plain average of all
//! stored returns (large Σ).
//!
//! `cargo run --release --example surrogate_lengthscale`

use ddopg::envs::{CartPole, Environment};
use ddopg::estimators::{effective_sample_size, log_surrogate_weights, surrogate_return, SupportSet, SurrogateConfig};
use ddopg::numkit::{MlpSpec, Rng};
use ddopg::policy::{EvalNoise, PolicyParams};
use ddopg::rollout::collect;

fn main() -> ddopg::Result<()> {
    let env = CartPole::new();
    let spec = MlpSpec::default_policy(4, 1);
    let mut rng = Rng::new(11, 0);
    let policies: Vec<PolicyParams> = (0..3).map(|_| PolicyParams::init(spec.clone(), &mut rng)).collect();
    let mut pairs = Vec::new();
    for p in &policies {
        for _ in 0..4 {
            pairs.push((collect(&env, p, &mut rng, 0.99)?, p.clone()));
        }
    }
    let returns: Vec<f64> = pairs.iter().map(|(t, _)| t.discounted_return()).collect();
    let own = returns[..4].iter().sum::<f64>() / 4.0;
    let global = returns.iter().sum::<f64>() / returns.len() as f64;
    println!("target = first behavior policy; own mean return {own:.3}, mean of all {global:.3}");
    println!("{:>8} {:>10} {:>8}", "log Σ", "estimate", "ESS");
    for log_var in [-40.0, -4.0, -2.0, 0.0, 2.0, 3.0, 4.0, 8.0, 40.0] {
        let cfg = SurrogateConfig::new(EvalNoise::isotropic(1, log_var)?, env.max_return());
        let support = SupportSet::from_pairs(&pairs, &cfg.noise)?;
        let estimate = surrogate_return(&support, &policies[0], &cfg)?;
        let ess = effective_sample_size(&log_surrogate_weights(&support, &policies[0], &cfg)?)?;
        println!("{log_var:>8} {estimate:>10.4} {ess:>8.2}");
    }
    Ok(())
}
