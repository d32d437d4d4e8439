use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Real;
use crate::envs::{Env, EnvSpec};
use crate::error::{Error, Result};
use crate::network::{InferenceSession, MaskTransform, NetworkConfig, RecurrentState, Weights};
use crate::training::sample_categorical;

/// Returns of a batch of evaluation episodes.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStats {
    pub returns: Vec<f64>,
    /// Steps taken in each episode.
    pub lengths: Vec<usize>,
    pub max: f64,
    pub mean: f64,
    pub n_episodes: usize,
}

impl EpisodeStats {
    pub fn new(returns: Vec<f64>, lengths: Vec<usize>) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::EmptyInput("EpisodeStats"));
        }
        if returns.len() != lengths.len() {
            return Err(Error::InvalidShape(format!(
                "{} returns for {} lengths",
                returns.len(),
                lengths.len()
            )));
        }
        let max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        Ok(Self {
            n_episodes: returns.len(),
            returns,
            lengths,
            max,
            mean,
        })
    }

    /// Sample standard deviation (0 for a single episode).
    pub fn std_dev(&self) -> f64 {
        if self.n_episodes < 2 {
            return 0.0;
        }
        let var = self.returns.iter().map(|r| (r - self.mean).powi(2)).sum::<f64>() / (self.n_episodes - 1) as f64;
        var.sqrt()
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev() / (self.n_episodes as f64).sqrt()
    }

    /// `episode,return,length` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("episode,return,length\n");
        for (i, (r, l)) in self.returns.iter().zip(&self.lengths).enumerate() {
            s.push_str(&format!("{i},{r},{l}\n"));
        }
        s
    }

    pub fn summary(&self) -> String {
        format!("max={} mean={} n={}", self.max, self.mean, self.n_episodes)
    }
}

/// Rejects transforms that the configuration cannot express: `inverse`
/// needs an invertible mask.
pub fn check_transform(cfg: &NetworkConfig, transform: MaskTransform) -> Result<()> {
    if transform == MaskTransform::Inverse && !cfg.policy_mask && !(cfg.value_mask && cfg.invert_value_mask) {
        return Err(Error::VariantMismatch(format!(
            "mask transform `inverse` needs an invertible mask, variant is {}",
            cfg.variant().name()
        )));
    }
    Ok(())
}

pub(crate) fn check_env(cfg: &NetworkConfig, env_spec: &EnvSpec) -> Result<()> {
    env_spec.validate()?;
    if env_spec.n_actions() != cfg.n_actions || env_spec.size != cfg.input_hw {
        return Err(Error::Config(format!(
            "network expects {} actions on {}×{} frames, {} has {} actions on {}×{}",
            cfg.n_actions,
            cfg.input_hw,
            cfg.input_hw,
            env_spec.kind,
            env_spec.n_actions(),
            env_spec.size,
            env_spec.size
        )));
    }
    Ok(())
}

/// Chooses an action from a policy vector.
pub(crate) fn choose<T: Real>(policy: &[T], greedy: bool, rng: &mut ChaCha8Rng) -> usize {
    if greedy {
        let mut best = 0;
        for (i, p) in policy.iter().enumerate() {
            if *p > policy[best] {
                best = i;
            }
        }
        best
    } else {
        sample_categorical(policy, rng)
    }
}

/// Plays one episode from `env`'s current reset state, calling `visit`
/// after every step with the step index, the trace and the chosen action.
pub(crate) fn play_episode<T: Real, F>(
    session: &mut InferenceSession<T>,
    env: &mut Env,
    env_seed: u64,
    transform: MaskTransform,
    greedy: bool,
    rng: &mut ChaCha8Rng,
    mut visit: F,
) -> Result<(f64, usize)>
where
    F: FnMut(usize, &crate::envs::Observation, &crate::network::ForwardTrace<T>, usize) -> Result<()>,
{
    let mut obs = env.reset(env_seed);
    let mut state = RecurrentState::zeros(session.config());
    let mut total = 0.0;
    let mut t = 0;
    loop {
        let trace = session.step(&obs.to_tensor(), &state, transform)?;
        let action = choose(&trace.policy, greedy, rng);
        visit(t, &obs, &trace, action)?;
        let step = env.step(action)?;
        total += step.reward;
        t += 1;
        if step.done {
            return Ok((total, t));
        }
        obs = step.obs;
        state = trace.next_state;
    }
}

/// Runs `episodes` full episodes, resetting the recurrent state each time.
/// Episode layouts and sampled actions both come from `seed`.
pub fn evaluate<T: Real>(
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    env_spec: &EnvSpec,
    episodes: usize,
    transform: MaskTransform,
    seed: u64,
    greedy: bool,
) -> Result<EpisodeStats> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    weights.validate(cfg)?;
    check_env(cfg, env_spec)?;
    check_transform(cfg, transform)?;
    let mut session = InferenceSession::new(weights, cfg)?;
    let mut env = env_spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    let mut lengths = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let env_seed = rng.gen();
        let (r, n) = play_episode(
            &mut session,
            &mut env,
            env_seed,
            transform,
            greedy,
            &mut rng,
            |_, _, _, _| Ok(()),
        )?;
        returns.push(r);
        lengths.push(n);
    }
    EpisodeStats::new(returns, lengths)
}

/// Uniformly random actions; layouts drawn as in `evaluate`.
pub fn random_baseline(env_spec: &EnvSpec, episodes: usize, seed: u64) -> Result<EpisodeStats> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    let mut env = env_spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = env_spec.n_actions();
    let mut returns = Vec::with_capacity(episodes);
    let mut lengths = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset(rng.gen());
        let (mut total, mut t) = (0.0, 0);
        loop {
            let step = env.step(rng.gen_range(0..n))?;
            total += step.reward;
            t += 1;
            if step.done {
                break;
            }
        }
        returns.push(total);
        lengths.push(t);
    }
    EpisodeStats::new(returns, lengths)
}

/// Percentage drop from `normal_mean` to `inverse_mean`.
pub fn decrease_rate(normal_mean: f64, inverse_mean: f64) -> Result<f64> {
    if normal_mean.is_nan() || normal_mean <= 0.0 || !inverse_mean.is_finite() {
        return Err(Error::UnsupportedDomain {
            normal: normal_mean,
            inverse: inverse_mean,
        });
    }
    // Dividing first keeps both endpoints exact: 0 for equal means, 100 for zero.
    Ok((normal_mean - inverse_mean) / normal_mean * 100.0)
}
