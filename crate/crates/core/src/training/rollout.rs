use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Real};
use crate::envs::{Env, Observation};
use crate::error::{Error, Result};
use crate::network::{forward_on, BoundParams, MaskTransform, NetworkConfig, RecurrentState, StepVars, Weights};

/// An environment plus the episode it is in the middle of.
pub struct Actor {
    env: Env,
    obs: Observation,
    episode_return: f64,
    episode_len: usize,
}

impl Actor {
    /// Wraps `env` and starts an episode from `seed`.
    pub fn new(mut env: Env, seed: u64) -> Self {
        let obs = env.reset(seed);
        Self {
            env,
            obs,
            episode_return: 0.0,
            episode_len: 0,
        }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    pub value: f64,
    pub log_prob: f64,
    pub entropy: f64,
    /// Handles into the rollout graph.
    pub vars: StepVars,
}

/// A bounded run of transitions recorded on one differentiable graph.
pub struct Rollout<T> {
    pub steps: Vec<Transition>,
    /// `V` of the state after the last step; zero when terminal.
    pub bootstrap_value: f64,
    pub terminal: bool,
    /// `(return, length)` of the episode that ended in this rollout.
    pub finished_episode: Option<(f64, usize)>,
    pub graph: Graph<T>,
    pub bound: BoundParams,
}

impl<T: Real> Rollout<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }
}

/// Draws an index from a categorical distribution.
pub fn sample_categorical<T: Real>(probs: &[T], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Runs up to `t_max` steps with actions sampled from the policy, recording
/// every forward pass on a fresh graph whose leaves are the weights.
///
/// The recurrent state is carried across steps and reset to zeros (along
/// with the environment) when the episode ends.
pub fn collect_rollout<T: Real>(
    actor: &mut Actor,
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    state: RecurrentState<T>,
    t_max: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Rollout<T>, RecurrentState<T>)> {
    if t_max == 0 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, weights, cfg, true)?;
    let mut h = g.leaf(&state.h);
    let mut c = g.leaf(&state.c);
    let mut steps = Vec::with_capacity(t_max);
    let mut terminal = false;
    let mut finished_episode = None;

    while steps.len() < t_max {
        let obs_var = g.leaf(&actor.obs.to_tensor());
        let vars = forward_on(&mut g, &bound, cfg, obs_var, h, c, MaskTransform::Identity)?;
        g.check_finite(vars.policy, "policy")?;
        let action = sample_categorical(g.value(vars.policy), rng);
        let log_policy = g.value(vars.log_policy);
        let entropy = -g
            .value(vars.policy)
            .iter()
            .zip(log_policy)
            .map(|(p, l)| p.as_f64() * l.as_f64())
            .sum::<f64>();
        let log_prob = log_policy[action].as_f64();
        let value = g.item(vars.value).as_f64();
        let result = actor.env.step(action)?;
        actor.episode_return += result.reward;
        actor.episode_len += 1;
        steps.push(Transition {
            obs: std::mem::replace(&mut actor.obs, result.obs),
            action,
            reward: result.reward,
            value,
            log_prob,
            entropy,
            vars,
        });
        h = vars.h;
        c = vars.c;
        if result.done {
            terminal = true;
            finished_episode = Some((actor.episode_return, actor.episode_len));
            break;
        }
    }

    let (bootstrap_value, next_state) = if terminal {
        actor.obs = actor.env.reset(rng.gen());
        actor.episode_return = 0.0;
        actor.episode_len = 0;
        (0.0, RecurrentState::zeros(cfg))
    } else {
        let next = RecurrentState {
            h: g.tensor(h),
            c: g.tensor(c),
        };
        // Bootstrap on constants so the extra pass stays out of the backward sweep.
        let mut tail = Graph::new();
        let tail_bound = BoundParams::bind(&mut tail, weights, cfg, false)?;
        let o = tail.leaf(&actor.obs.to_tensor());
        let hh = tail.leaf(&next.h);
        let cc = tail.leaf(&next.c);
        let v = forward_on(&mut tail, &tail_bound, cfg, o, hh, cc, MaskTransform::Identity)?;
        (tail.item(v.value).as_f64(), next)
    };

    Ok((
        Rollout {
            steps,
            bootstrap_value,
            terminal,
            finished_episode,
            graph: g,
            bound,
        },
        next_state,
    ))
}

/// Re-records a fixed trajectory (observations, actions, rewards) on a fresh
/// graph, starting from `state`.
#[allow(clippy::too_many_arguments)]
pub fn replay<T: Real>(
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    state: &RecurrentState<T>,
    observations: &[Observation],
    actions: &[usize],
    rewards: &[f64],
    bootstrap_value: f64,
    trainable: bool,
) -> Result<Rollout<T>> {
    if observations.len() != actions.len() || actions.len() != rewards.len() {
        return Err(Error::InvalidShape(format!(
            "replay of {} observations, {} actions, {} rewards",
            observations.len(),
            actions.len(),
            rewards.len()
        )));
    }
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, weights, cfg, trainable)?;
    let mut h = g.leaf(&state.h);
    let mut c = g.leaf(&state.c);
    let mut steps = Vec::with_capacity(actions.len());
    for ((obs, &action), &reward) in observations.iter().zip(actions).zip(rewards) {
        if action >= cfg.n_actions {
            return Err(Error::InvalidArgument(format!("action {action} out of range")));
        }
        let o = g.leaf(&obs.to_tensor());
        let vars = forward_on(&mut g, &bound, cfg, o, h, c, MaskTransform::Identity)?;
        let trace = vars.materialize(&g);
        steps.push(Transition {
            obs: obs.clone(),
            action,
            reward,
            value: trace.value.as_f64(),
            log_prob: trace.log_policy[action].as_f64(),
            entropy: trace.entropy(),
            vars,
        });
        h = vars.h;
        c = vars.c;
    }
    Ok(Rollout {
        steps,
        bootstrap_value,
        terminal: bootstrap_value == 0.0,
        finished_episode: None,
        graph: g,
        bound,
    })
}
