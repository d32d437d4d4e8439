//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key has a default,
//! unknown or repeated keys are errors. `preset` picks the base values
//! (`full` or `desk`) before the remaining keys are applied, wherever it
//! appears in the file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::envs::{EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Variant};
use crate::training::Hyperparams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    /// Published widths and optimizer settings.
    #[default]
    Full,
    /// Narrow network and the desk optimizer settings.
    Desk,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Full => "full",
            Preset::Desk => "desk",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!("unknown preset `{other}` (full, desk)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub preset: Preset,
    pub env: EnvSpec,
    /// `input_hw` and `n_actions` always follow `env`.
    pub network: NetworkConfig,
    pub hyper: Hyperparams,
    pub seed: u64,
    /// Seeds for `compare`.
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub out_dir: Option<PathBuf>,
}

pub const KEYS: &[&str] = &[
    "preset",
    "env",
    "size",
    "episode_cap",
    "variant",
    "fe_channels",
    "lstm_channels",
    "branch_channels",
    "invert_value_mask",
    "conv_kernel",
    "conv_stride",
    "conv_padding",
    "gamma",
    "lr",
    "rms_decay",
    "rms_eps",
    "n_workers",
    "t_max",
    "entropy_coef",
    "value_coef",
    "grad_clip_norm",
    "total_steps",
    "episode_step_cap",
    "checkpoint_interval",
    "seed",
    "seeds",
    "eval_episodes",
    "out_dir",
];

impl Config {
    pub fn preset(preset: Preset) -> Self {
        let env = EnvSpec::new(EnvKind::Catch, 20);
        let (network, hyper) = match preset {
            Preset::Full => (
                NetworkConfig::new(env.size, env.n_actions(), Variant::Both),
                Hyperparams::default(),
            ),
            Preset::Desk => (
                NetworkConfig::desk(env.size, env.n_actions(), Variant::Both),
                Hyperparams::desk(),
            ),
        };
        Self {
            preset,
            env,
            network,
            hyper,
            seed: 0,
            seeds: (0..5).collect(),
            eval_episodes: 100,
            out_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", i + 1)));
            }
            if pairs.iter().any(|(_, seen, _)| *seen == k) {
                return Err(Error::Config(format!("line {}: key `{k}` given twice", i + 1)));
            }
            pairs.push((i + 1, k, v));
        }
        let preset = match pairs.iter().find(|(_, k, _)| *k == "preset") {
            Some((_, _, v)) => v.parse()?,
            None => Preset::default(),
        };
        let mut cfg = Self::preset(preset);
        for (line, k, v) in pairs {
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {line}: {k}: {}", strip(e))))?;
        }
        cfg.network.input_hw = cfg.env.size;
        cfg.network.n_actions = cfg.env.n_actions();
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let n = &mut self.network;
        let h = &mut self.hyper;
        match key {
            "preset" => {}
            "env" => {
                let kind: EnvKind = v.parse()?;
                let cap_was_default = self.env.episode_cap == self.env.kind.default_episode_cap();
                self.env.kind = kind;
                if cap_was_default {
                    self.env.episode_cap = kind.default_episode_cap();
                }
            }
            "size" => self.env.size = num(v)?,
            "episode_cap" => self.env.episode_cap = num(v)?,
            "variant" => {
                let variant: Variant = v.parse()?;
                n.policy_mask = variant.policy_mask();
                n.value_mask = variant.value_mask();
            }
            "fe_channels" => {
                let c = list::<usize>(v)?;
                n.fe_channels = c
                    .try_into()
                    .map_err(|_| Error::Config("expected three comma-separated channels".into()))?;
            }
            "lstm_channels" => n.lstm_channels = num(v)?,
            "branch_channels" => n.branch_channels = num(v)?,
            "invert_value_mask" => n.invert_value_mask = flag(v)?,
            "conv_kernel" => n.conv_kernel = num(v)?,
            "conv_stride" => n.conv_stride = num(v)?,
            "conv_padding" => n.conv_padding = num(v)?,
            "gamma" => h.gamma = num(v)?,
            "lr" => h.lr = num(v)?,
            "rms_decay" => h.rms_decay = num(v)?,
            "rms_eps" => h.rms_eps = num(v)?,
            "n_workers" => h.n_workers = num(v)?,
            "t_max" => h.t_max = num(v)?,
            "entropy_coef" => h.entropy_coef = num(v)?,
            "value_coef" => h.value_coef = num(v)?,
            "grad_clip_norm" => h.grad_clip_norm = num(v)?,
            "total_steps" => h.total_steps = num::<f64>(v).and_then(whole)?,
            "episode_step_cap" => h.episode_step_cap = num(v)?,
            "checkpoint_interval" => h.checkpoint_interval = num::<f64>(v).and_then(whole)?,
            "seed" => self.seed = num(v)?,
            "seeds" => self.seeds = list(v)?,
            "eval_episodes" => self.eval_episodes = num(v)?,
            "out_dir" => self.out_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => unreachable!("key list checked before set"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.network.validate()?;
        self.hyper.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one seed".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be positive".into()));
        }
        Ok(())
    }

    /// Every key with its effective value; parses back to the same config.
    pub fn resolved(&self) -> String {
        let n = &self.network;
        let h = &self.hyper;
        let join = |xs: &[String]| xs.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("preset", self.preset.name().into());
        put("env", self.env.kind.name().into());
        put("size", self.env.size.to_string());
        put("episode_cap", self.env.episode_cap.to_string());
        put("variant", n.variant().name().into());
        put("fe_channels", join(&n.fe_channels.map(|c| c.to_string())));
        put("lstm_channels", n.lstm_channels.to_string());
        put("branch_channels", n.branch_channels.to_string());
        put("invert_value_mask", n.invert_value_mask.to_string());
        put("conv_kernel", n.conv_kernel.to_string());
        put("conv_stride", n.conv_stride.to_string());
        put("conv_padding", n.conv_padding.to_string());
        put("gamma", h.gamma.to_string());
        put("lr", h.lr.to_string());
        put("rms_decay", h.rms_decay.to_string());
        put("rms_eps", h.rms_eps.to_string());
        put("n_workers", h.n_workers.to_string());
        put("t_max", h.t_max.to_string());
        put("entropy_coef", h.entropy_coef.to_string());
        put("value_coef", h.value_coef.to_string());
        put("grad_clip_norm", h.grad_clip_norm.to_string());
        put("total_steps", h.total_steps.to_string());
        put("episode_step_cap", h.episode_step_cap.to_string());
        put("checkpoint_interval", h.checkpoint_interval.to_string());
        put("seed", self.seed.to_string());
        put(
            "seeds",
            join(&self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
        );
        put("eval_episodes", self.eval_episodes.to_string());
        put(
            "out_dir",
            self.out_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        s
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::preset(Preset::default())
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn num<T: FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("cannot parse `{v}`")))
}

/// Accepts `2e5` style step budgets as long as they are whole.
fn whole(x: f64) -> Result<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!("`{x}` is not a non-negative whole number")))
    }
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(|x| num(x.trim())).collect()
}

fn flag(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("expected true or false, got `{v}`"))),
    }
}
