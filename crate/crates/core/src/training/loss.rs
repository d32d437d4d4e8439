use crate::autodiff::{Graph, Real, Var};
use crate::error::{Error, Result};

use super::rollout::{Rollout, Transition};

/// n-step returns `R_t = r_t + γ R_{t+1}` seeded with `R_T = bootstrap`,
/// and advantages `A_t = R_t - V_t`.
pub fn compute_returns(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if rewards.len() != values.len() {
        return Err(Error::InvalidShape(format!(
            "{} rewards for {} values",
            rewards.len(),
            values.len()
        )));
    }
    let mut returns = vec![0.0; rewards.len()];
    let mut running = bootstrap;
    for t in (0..rewards.len()).rev() {
        running = rewards[t] + gamma * running;
        returns[t] = running;
    }
    let advantages = returns.iter().zip(values).map(|(r, v)| r - v).collect();
    Ok((returns, advantages))
}

impl<T: Real> Rollout<T> {
    pub fn returns(&self, gamma: f64) -> (Vec<f64>, Vec<f64>) {
        compute_returns(&self.rewards(), &self.values(), self.bootstrap_value, gamma).expect("aligned by construction")
    }
}

/// Scalar loss and its three summed components, as graph handles.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub policy: Var,
    pub value: Var,
    /// Summed policy entropy (the loss subtracts `entropy_coef` times it).
    pub entropy: Var,
}

/// Sum over steps of
/// `-log π(a_t)·A_t + value_coef·(R_t - V_t)² - entropy_coef·H(π_t)`.
///
/// Advantages and returns enter as constants, so the policy term carries no
/// gradient into the value head.
pub fn a3c_loss<T: Real>(
    g: &mut Graph<T>,
    steps: &[Transition],
    returns: &[f64],
    advantages: &[f64],
    entropy_coef: f64,
    value_coef: f64,
) -> Result<LossVars> {
    if steps.len() != returns.len() || steps.len() != advantages.len() {
        return Err(Error::InvalidShape(format!(
            "loss over {} steps with {} returns and {} advantages",
            steps.len(),
            returns.len(),
            advantages.len()
        )));
    }
    if steps.is_empty() {
        return Err(Error::EmptyInput("a3c_loss"));
    }
    let mut policy_terms = Vec::with_capacity(steps.len());
    let mut value_terms = Vec::with_capacity(steps.len());
    let mut entropy_terms = Vec::with_capacity(steps.len());
    for ((step, &ret), &adv) in steps.iter().zip(returns).zip(advantages) {
        let v = step.vars;
        let lp = g.index(v.log_policy, step.action)?;
        policy_terms.push(g.scale(lp, T::from_f64(-adv)));
        let err = g.affine(v.value, -T::one(), T::from_f64(ret));
        value_terms.push(g.square(err));
        let plogp = g.mul(v.policy, v.log_policy)?;
        let neg_h = g.sum(plogp);
        entropy_terms.push(g.scale(neg_h, -T::one()));
    }
    let policy = sum_scalars(g, &policy_terms)?;
    let value = sum_scalars(g, &value_terms)?;
    let entropy = sum_scalars(g, &entropy_terms)?;
    let weighted_value = g.scale(value, T::from_f64(value_coef));
    let weighted_entropy = g.scale(entropy, T::from_f64(-entropy_coef));
    let partial = g.add(policy, weighted_value)?;
    let total = g.add(partial, weighted_entropy)?;
    Ok(LossVars {
        total,
        policy,
        value,
        entropy,
    })
}

fn sum_scalars<T: Real>(g: &mut Graph<T>, xs: &[Var]) -> Result<Var> {
    let stacked = g.concat(xs)?;
    Ok(g.sum(stacked))
}
