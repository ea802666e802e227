//! A quick battery of numerical checks that runs in well under a minute:
//! analytic gradients against finite differences, ESS and softmax limits,
//! and run-to-run determinism on the point-mass task.

use crate::agents::{ddopg_run, Budget, DdopgConfig};
use crate::envs::{Environment, PointMass};
use crate::error::Result;
use crate::estimators::{effective_sample_size, surrogate_grad, surrogate_return, SupportSet, SurrogateConfig};
use crate::numkit::{finite_diff_grad, MlpSpec, Rng};
use crate::optim::InnerLoopConfig;
use crate::policy::{traj_log_lik, traj_log_lik_grad, EvalNoise, PolicyParams};
use crate::replay::softmax;
use crate::rollout::collect;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = numeric.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
    diff / scale
}

fn scaled_policy(spec: &MlpSpec, seed: u64, scale: f64) -> PolicyParams {
    let p = PolicyParams::init(spec.clone(), &mut Rng::new(seed, 0));
    p.with_theta(p.theta().iter().map(|t| t * scale).collect()).expect("same length")
}

fn log_lik_gradient() -> Result<CheckResult> {
    let env = PointMass::new();
    let spec = MlpSpec::new(2, vec![8, 8], 1)?;
    let noise = EvalNoise::isotropic(1, 0.5)?;
    let behavior = scaled_policy(&spec, 11, 0.5);
    let traj = collect(&env, &behavior, &mut Rng::new(1, 1), 0.99)?;
    let target = scaled_policy(&spec, 12, 0.5);
    let g = traj_log_lik_grad(&target, &noise, &traj)?;
    let fd = finite_diff_grad(
        |th| traj_log_lik(&target.with_theta(th.to_vec()).expect("len"), &noise, &traj).unwrap_or(f64::NAN),
        target.theta(),
        1e-5,
    )?;
    let err = rel_err(&g, &fd);
    Ok(CheckResult { name: "log-likelihood gradient", passed: err <= 1e-4, detail: format!("relative error {err:.2e}") })
}

fn surrogate_gradient() -> Result<CheckResult> {
    let env = PointMass::new();
    let spec = MlpSpec::new(2, vec![6], 1)?;
    let noise = EvalNoise::isotropic(1, -1.0)?;
    let mut pairs = Vec::new();
    for k in 0..4 {
        let p = scaled_policy(&spec, 20 + k, 0.4);
        pairs.push((collect(&env, &p, &mut Rng::new(k, 1), 0.99)?, p));
    }
    let support = SupportSet::from_pairs(&pairs, &noise)?;
    let cfg = SurrogateConfig::new(noise, env.max_return());
    let target = scaled_policy(&spec, 30, 0.4);
    let g = surrogate_grad(&support, &target, &cfg)?;
    let fd = finite_diff_grad(
        |th| surrogate_return(&support, &target.with_theta(th.to_vec()).expect("len"), &cfg).unwrap_or(f64::NAN),
        target.theta(),
        1e-5,
    )?;
    let err = rel_err(&g, &fd);
    Ok(CheckResult { name: "surrogate gradient", passed: err <= 1e-4, detail: format!("relative error {err:.2e}") })
}

fn ess_limits() -> Result<CheckResult> {
    let uniform = effective_sample_size(&[0.3; 7])?;
    let mut one_hot = vec![f64::NEG_INFINITY; 7];
    one_hot[2] = 1.0;
    let single = effective_sample_size(&one_hot)?;
    let passed = uniform == 7.0 && single == 1.0;
    Ok(CheckResult { name: "ESS limits", passed, detail: format!("uniform {uniform}, one-hot {single}") })
}

fn softmax_limit() -> CheckResult {
    let p = softmax(&[0.0, 0.25, 1.0, 0.5], 1e9);
    let dev = p.iter().map(|v| (v - 0.25).abs()).fold(0.0, f64::max);
    CheckResult { name: "softmax high temperature", passed: dev < 1e-6, detail: format!("max deviation {dev:.2e}") }
}

fn determinism() -> Result<CheckResult> {
    let cfg = DdopgConfig {
        hidden: vec![8],
        inner: InnerLoopConfig { max_iters: 10, ..Default::default() },
        budget: Budget { max_steps: 200, ..Default::default() },
        ..Default::default()
    };
    let env = PointMass::new();
    let a = ddopg_run(&env, &cfg, 404)?.to_csv();
    let b = ddopg_run(&env, &cfg, 404)?.to_csv();
    Ok(CheckResult {
        name: "byte-identical reruns",
        passed: a == b,
        detail: format!("{} CSV bytes", a.len()),
    })
}

/// Runs all checks; errors inside a check are reported as failures.
pub fn selftest() -> Vec<CheckResult> {
    let failed = |name, e: crate::Error| CheckResult { name, passed: false, detail: e.to_string() };
    vec![
        log_lik_gradient().unwrap_or_else(|e| failed("log-likelihood gradient", e)),
        surrogate_gradient().unwrap_or_else(|e| failed("surrogate gradient", e)),
        ess_limits().unwrap_or_else(|e| failed("ESS limits", e)),
        softmax_limit(),
        determinism().unwrap_or_else(|e| failed("byte-identical reruns", e)),
    ]
}
