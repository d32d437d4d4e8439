use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{check_env, choose};
use super::image::block_sizes;
use crate::autodiff::Real;
use crate::envs::{EnvKind, EnvSpec, InjectionDuration, InjectionSpec, Sprite, FUEL_BAR};
use crate::error::{Error, Result};
use crate::network::{Branch, InferenceSession, MaskTransform, NetworkConfig, RecurrentState, Weights};

/// Index of the fuel game's `up` action, which heads for the refuelling row.
pub const SURFACE_ACTION: usize = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionFrame {
    pub frame: usize,
    /// Whether the sprite was drawn into this frame's observation.
    pub injected: bool,
    pub action: usize,
    pub value: f64,
    pub policy: Vec<f64>,
    /// Mean mask value over the region cells; `None` when the mask is off.
    pub policy_region_mean: Option<f64>,
    pub value_region_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectionReport {
    pub injection_frame: usize,
    /// Mask cells (row-major) that the sprite stencil maps to.
    pub region_cells: Vec<usize>,
    pub action_names: Vec<String>,
    pub frames: Vec<InjectionFrame>,
}

impl InjectionReport {
    /// Mean probability of `action` over frames in `[from, to)` present in
    /// the report; `None` if no frame falls in the range.
    pub fn mean_probability(&self, action: usize, from: usize, to: usize) -> Option<f64> {
        let ps: Vec<f64> = self
            .frames
            .iter()
            .filter(|f| f.frame >= from && f.frame < to)
            .map(|f| f.policy[action])
            .collect();
        (!ps.is_empty()).then(|| ps.iter().sum::<f64>() / ps.len() as f64)
    }

    /// Mean probability of `action` over the `span` frames before the
    /// injection and the `span` frames from the injection on.
    pub fn pre_post(&self, action: usize, span: usize) -> Option<(f64, f64)> {
        let k = self.injection_frame;
        Some((
            self.mean_probability(action, k.saturating_sub(span), k)?,
            self.mean_probability(action, k, k + span)?,
        ))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,injected,action,value,policy_region_mean,value_region_mean");
        for name in &self.action_names {
            s.push_str(&format!(",p_{name}"));
        }
        s.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.frames {
            s.push_str(&format!(
                "{},{},{},{},{},{}",
                f.frame,
                u8::from(f.injected),
                f.action,
                f.value,
                opt(f.policy_region_mean),
                opt(f.value_region_mean)
            ));
            for p in &f.policy {
                s.push_str(&format!(",{p}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Mask cells covered by the stencil: a cell belongs to the region when at
/// least half of the observation pixels it replicates to are stencil
/// pixels. A sprite too small to fill half of any cell falls back to the
/// cells holding the most stencil pixels.
pub fn region_cells(spec: &InjectionSpec, obs_size: usize, side: usize) -> Result<Vec<usize>> {
    let sizes = block_sizes(obs_size, side);
    let mut owner = Vec::with_capacity(obs_size);
    for (cell, &n) in sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(cell, n));
    }
    let mut counts = vec![0usize; side * side];
    for (r, c) in spec.stencil_pixels() {
        if r >= obs_size || c >= obs_size {
            return Err(Error::InvalidArgument("sprite stencil outside the observation".into()));
        }
        counts[owner[r] * side + owner[c]] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return Err(Error::InvalidArgument("sprite stencil is empty".into()));
    }
    let cells: Vec<usize> = (0..side * side)
        .filter(|&i| 2 * counts[i] >= sizes[i / side] * sizes[i % side])
        .collect();
    if !cells.is_empty() {
        return Ok(cells);
    }
    Ok((0..side * side).filter(|&i| counts[i] == best).collect())
}

/// A full fuel gauge drawn over the gauge row from `start_frame` on.
pub fn full_gauge_injection(size: usize, start_frame: usize, duration: InjectionDuration) -> Result<InjectionSpec> {
    Ok(InjectionSpec {
        sprite: Sprite::solid(1, size, FUEL_BAR)?,
        row: size - 1,
        col: 0,
        start_frame,
        duration,
    })
}

/// Plays one episode for up to `window` frames with the sprite injected
/// per `spec`, logging the policy, value and region-mean masks per frame.
/// Layout and any sampled actions come from `seed`.
pub fn injection_response<T: Real>(
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    env_spec: &EnvSpec,
    spec: &InjectionSpec,
    window: usize,
    seed: u64,
    greedy: bool,
) -> Result<InjectionReport> {
    if !cfg.policy_mask && !cfg.value_mask {
        return Err(Error::VariantMismatch(
            "injection response needs a masked variant, checkpoint is vanilla".into(),
        ));
    }
    if spec.start_frame >= window {
        return Err(Error::InvalidArgument(format!(
            "window of {window} frames does not cover injection frame {}",
            spec.start_frame
        )));
    }
    weights.validate(cfg)?;
    check_env(cfg, env_spec)?;
    let region = region_cells(spec, env_spec.size, cfg.feature_hw())?;
    let mut env = env_spec.build()?;
    env.inject(spec.clone())?;
    let mut session = InferenceSession::new(weights, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset(rng.gen());
    let mut state = RecurrentState::zeros(cfg);
    let mut frames = Vec::new();
    for frame in 0..window {
        let trace = session.step(&obs.to_tensor(), &state, MaskTransform::Identity)?;
        let region_mean = |b: Branch| {
            trace.mask(b).map(|m| {
                let v = m.values().data();
                region.iter().map(|&i| v[i].as_f64()).sum::<f64>() / region.len() as f64
            })
        };
        let action = choose(&trace.policy, greedy, &mut rng);
        frames.push(InjectionFrame {
            frame,
            injected: spec.active_at(frame),
            action,
            value: trace.value.as_f64(),
            policy: trace.policy.iter().map(|p| p.as_f64()).collect(),
            policy_region_mean: region_mean(Branch::Policy),
            value_region_mean: region_mean(Branch::Value),
        });
        let step = env.step(action)?;
        if step.done {
            break;
        }
        obs = step.obs;
        state = trace.next_state;
    }
    if frames.len() <= spec.start_frame {
        return Err(Error::InvalidArgument(format!(
            "episode ended after {} frames, before injection frame {}",
            frames.len(),
            spec.start_frame
        )));
    }
    Ok(InjectionReport {
        injection_frame: spec.start_frame,
        region_cells: region,
        action_names: env_spec.kind.action_names().iter().map(|s| s.to_string()).collect(),
        frames,
    })
}

/// First frame at which the agent's fuel is at or below `fraction` of the
/// maximum when playing without injection, or `None` if it never is.
pub fn low_fuel_frame<T: Real>(
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    env_spec: &EnvSpec,
    fraction: f64,
    limit: usize,
    seed: u64,
    greedy: bool,
) -> Result<Option<usize>> {
    if env_spec.kind != EnvKind::Fuel {
        return Err(Error::InvalidArgument("low_fuel_frame needs the fuel game".into()));
    }
    check_env(cfg, env_spec)?;
    let mut env = env_spec.build()?;
    let mut session = InferenceSession::new(weights, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = env.reset(rng.gen());
    let mut state = RecurrentState::zeros(cfg);
    for frame in 0..limit {
        let (fuel, max) = env.fuel_level().expect("fuel game");
        if fuel as f64 <= fraction * max as f64 {
            return Ok(Some(frame));
        }
        let trace = session.step(&obs.to_tensor(), &state, MaskTransform::Identity)?;
        let action = choose(&trace.policy, greedy, &mut rng);
        let step = env.step(action)?;
        if step.done {
            return Ok(None);
        }
        obs = step.obs;
        state = trace.next_state;
    }
    Ok(None)
}
