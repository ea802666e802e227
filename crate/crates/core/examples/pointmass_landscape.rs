//! Surrogate return landscape of linear point-mass policies `a = k1 p + k2 v`
//! for three lengthscales, printed as text grids next to the true return.
//! Short lengthscales keep the estimate local to the behavior policies;
//! long ones flatten it towards the average stored return.
//!
//! `cargo run --release --example pointmass_landscape`

use ddopg::envs::{Environment, PointMass};
use ddopg::estimators::{lower_bound, surrogate_return, SupportSet, SurrogateConfig};
use ddopg::numkit::{MlpSpec, Rng};
use ddopg::policy::{EvalNoise, PolicyParams};
use ddopg::rollout::collect;

fn linear(k1: f64, k2: f64) -> PolicyParams {
    let spec = MlpSpec::new(2, vec![], 1).expect("valid spec");
    PolicyParams::new(spec, vec![k1, k2, 0.0]).expect("three parameters")
}

fn main() -> ddopg::Result<()> {
    let env = PointMass::new();
    let behaviors = [(-1.0, -1.0), (-0.2, -1.5), (-2.0, -0.5), (0.0, 0.0)];
    let grid: Vec<f64> = (0..7).map(|i| -2.0 + 0.5 * i as f64).collect();
    let mut rng = Rng::new(5, 0);

    println!("true return (rows k1, columns k2 from -2 to 1)");
    for &k1 in &grid {
        let row: Vec<String> = grid
            .iter()
            .map(|&k2| Ok(format!("{:7.2}", collect(&env, &linear(k1, k2), &mut rng, 1.0)?.discounted_return())))
            .collect::<ddopg::Result<_>>()?;
        println!("  {:5.1} {}", k1, row.join(""));
    }

    for log_var in [-4.0, -2.0, 0.0] {
        let noise = EvalNoise::isotropic(1, log_var)?;
        let pairs = behaviors
            .iter()
            .map(|&(k1, k2)| Ok((collect(&env, &linear(k1, k2), &mut rng, 1.0)?, linear(k1, k2))))
            .collect::<ddopg::Result<Vec<_>>>()?;
        let support = SupportSet::from_pairs(&pairs, &noise)?;
        let cfg = SurrogateConfig::new(noise, env.max_return());
        println!("log Sigma = {log_var}: surrogate estimate / lower bound");
        for &k1 in &grid {
            let row: Vec<String> = grid
                .iter()
                .map(|&k2| {
                    let p = linear(k1, k2);
                    Ok(format!(" {:6.2}/{:<7.1}", surrogate_return(&support, &p, &cfg)?, lower_bound(&support, &p, &cfg)?))
                })
                .collect::<ddopg::Result<_>>()?;
            println!("  {:5.1}{}", k1, row.join(""));
        }
    }
    Ok(())
}
