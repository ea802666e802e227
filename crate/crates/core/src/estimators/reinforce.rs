use crate::error::{check_dim, Error, Result};
use crate::numkit::{solve_spd, RealMat};
use crate::policy::{EvalNoise, LogLikEvaluator, PolicyParams};
use crate::rollout::{reward_to_go, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnWeighting {
    /// Each score term is weighted by the full trajectory return.
    FullReturn,
    /// Each score term is weighted by the return collected from that step on.
    RewardToGo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    None,
    /// Least-squares fit of returns-to-go on `[s, s², t/H, (t/H)², (t/H)³, 1]`,
    /// refit on every batch. `horizon` is the `H` used to scale time.
    LinearFeature { horizon: usize },
}

/// Linear state/time feature baseline.
#[derive(Debug, Clone)]
pub struct LinearBaseline {
    horizon: usize,
    coef: Vec<f64>,
}

impl LinearBaseline {
    const REG: f64 = 1e-5;

    pub fn features(state: &[f64], t: usize, horizon: usize) -> Vec<f64> {
        let tau = t as f64 / horizon as f64;
        let mut f = Vec::with_capacity(2 * state.len() + 4);
        f.extend_from_slice(state);
        f.extend(state.iter().map(|s| s * s));
        f.extend_from_slice(&[tau, tau * tau, tau * tau * tau, 1.0]);
        f
    }

    pub fn fit(trajs: &[Trajectory], horizon: usize) -> Result<Self> {
        if trajs.is_empty() {
            return Err(Error::Empty("linear baseline"));
        }
        let dim = 2 * trajs[0].state_dim() + 4;
        let mut gram = RealMat::zeros(dim, dim);
        let mut rhs = vec![0.0; dim];
        for traj in trajs {
            let targets = reward_to_go(traj.rewards(), traj.gamma());
            for (t, target) in targets.iter().enumerate() {
                let f = Self::features(traj.states().row(t), t, horizon);
                for i in 0..dim {
                    rhs[i] += f[i] * target;
                    for j in 0..dim {
                        gram.set(i, j, gram.get(i, j) + f[i] * f[j]);
                    }
                }
            }
        }
        let mut reg = Self::REG;
        for _ in 0..6 {
            let mut a = gram.clone();
            for i in 0..dim {
                a.set(i, i, a.get(i, i) + reg);
            }
            if let Ok(coef) = solve_spd(&a, &rhs) {
                if coef.iter().all(|c| c.is_finite()) {
                    return Ok(Self { horizon, coef });
                }
            }
            reg *= 10.0;
        }
        Err(Error::NonFinite("linear baseline fit"))
    }

    pub fn predict(&self, state: &[f64], t: usize) -> f64 {
        Self::features(state, t, self.horizon)
            .iter()
            .zip(&self.coef)
            .map(|(f, c)| f * c)
            .sum()
    }
}

/// Score-function gradient `1/N Σᵢ Σ_t ∇log π(a_t|s_t;θ) (g_t − b(s_t))`
/// where π is the Gaussian `N(μ_θ(s), Σ)`.
pub fn reinforce_grad(
    trajs: &[Trajectory],
    params: &PolicyParams,
    noise: &EvalNoise,
    baseline: Baseline,
    weighting: ReturnWeighting,
) -> Result<Vec<f64>> {
    if trajs.is_empty() {
        return Err(Error::Empty("reinforce_grad"));
    }
    let fitted = match baseline {
        Baseline::None => None,
        Baseline::LinearFeature { horizon } => Some(LinearBaseline::fit(trajs, horizon)?),
    };
    let mut evaluator = LogLikEvaluator::new(params.spec(), noise)?;
    let mut grad = vec![0.0; params.len()];
    let inv_n = 1.0 / trajs.len() as f64;
    for traj in trajs {
        check_dim("trajectory state dim", params.spec().input_dim(), traj.state_dim())?;
        check_dim("trajectory action dim", params.spec().output_dim(), traj.action_dim())?;
        let targets = match weighting {
            ReturnWeighting::RewardToGo => reward_to_go(traj.rewards(), traj.gamma()),
            ReturnWeighting::FullReturn => vec![traj.discounted_return(); traj.len()],
        };
        for (t, target) in targets.iter().enumerate() {
            let state = traj.states().row(t);
            let b = fitted.as_ref().map_or(0.0, |bl| bl.predict(state, t));
            let weight = (target - b) * inv_n;
            if weight != 0.0 {
                evaluator.step_score(params.theta(), state, traj.actions().row(t), weight, &mut grad)?;
            }
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("reinforce_grad"));
    }
    Ok(grad)
}
