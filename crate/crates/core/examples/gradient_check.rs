//! Compares the analytic trajectory log-likelihood gradient and the
//! weighted importance-sampling surrogate gradient with central finite
//! differences.
//!
//! `cargo run --release --example gradient_check`

use ddopg::envs::{CartPole, Environment, PointMass};
use ddopg::estimators::{surrogate_grad, surrogate_return, SupportSet, SurrogateConfig};
use ddopg::numkit::{finite_diff_grad, MlpSpec, Rng};
use ddopg::policy::{traj_log_lik, traj_log_lik_grad, EvalNoise, PolicyParams};
use ddopg::rollout::collect;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    diff / b.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn main() -> ddopg::Result<()> {
    let mut rng = Rng::new(2024, 0);

    let env = CartPole::new();
    let spec = MlpSpec::default_policy(4, 1);
    let noise = EvalNoise::isotropic(1, 3.0)?;
    println!("trajectory log-likelihood, {spec} network, cartpole rollouts");
    for k in 0..5 {
        let behavior = PolicyParams::init(spec.clone(), &mut rng);
        let traj = collect(&env, &behavior, &mut rng, 0.99)?;
        let target = PolicyParams::init(spec.clone(), &mut rng);
        let g = traj_log_lik_grad(&target, &noise, &traj)?;
        let fd = finite_diff_grad(
            |th| traj_log_lik(&target.with_theta(th.to_vec()).expect("same size"), &noise, &traj).unwrap_or(f64::NAN),
            target.theta(),
            1e-5,
        )?;
        println!("  instance {k}: H = {:3}, relative error {:.2e}", traj.len(), rel_err(&g, &fd));
    }

    let env = PointMass::new();
    let spec = MlpSpec::new(2, vec![16], 1)?;
    let noise = EvalNoise::isotropic(1, -1.0)?;
    let mut pairs = Vec::new();
    for _ in 0..6 {
        let p = PolicyParams::init(spec.clone(), &mut rng);
        pairs.push((collect(&env, &p, &mut rng, 0.99)?, p));
    }
    let support = SupportSet::from_pairs(&pairs, &noise)?;
    let cfg = SurrogateConfig::new(noise, env.max_return());
    let target = PolicyParams::init(spec, &mut rng);
    let g = surrogate_grad(&support, &target, &cfg)?;
    let fd = finite_diff_grad(
        |th| surrogate_return(&support, &target.with_theta(th.to_vec()).expect("same size"), &cfg).unwrap_or(f64::NAN),
        target.theta(),
        1e-5,
    )?;
    println!("weighted IS surrogate gradient on point-mass: relative error {:.2e}", rel_err(&g, &fd));
    Ok(())
}
