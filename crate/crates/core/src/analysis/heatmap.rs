use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{check_env, play_episode};
use super::image::{encode_pgm, encode_ppm, overlay, quantize, upsample, write_file};
use crate::autodiff::Real;
use crate::envs::{EnvSpec, Observation};
use crate::error::{Error, Result};
use crate::network::{Branch, ForwardTrace, InferenceSession, MaskTransform, NetworkConfig, Weights};

/// One branch's attention map at one timestep, with what it is drawn over.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapFrame {
    pub episode: usize,
    pub t: usize,
    pub branch: Branch,
    /// Side of the native mask grid.
    pub side: usize,
    pub mask: Vec<f64>,
    /// Side of the observation.
    pub size: usize,
    pub upsampled: Vec<f64>,
    pub observation: Vec<f64>,
    pub action: usize,
    pub value: f64,
}

impl HeatmapFrame {
    /// Frames for every enabled mask of `trace`.
    pub fn from_trace<T: Real>(
        episode: usize,
        t: usize,
        obs: &Observation,
        trace: &ForwardTrace<T>,
        action: usize,
    ) -> Result<Vec<Self>> {
        let size = obs.size();
        let observation: Vec<f64> = obs.pixels().iter().map(|&p| p as f64).collect();
        let mut out = Vec::new();
        for branch in [Branch::Policy, Branch::Value] {
            let Some(m) = trace.mask(branch) else { continue };
            let side = m.values().shape()[1];
            let mask: Vec<f64> = m.values().data().iter().map(|v| v.as_f64()).collect();
            out.push(Self {
                episode,
                t,
                branch,
                side,
                upsampled: upsample(&mask, side, size)?,
                mask,
                size,
                observation: observation.clone(),
                action,
                value: trace.value.as_f64(),
            });
        }
        Ok(out)
    }

    pub fn mask_pgm(&self) -> Vec<u8> {
        let px: Vec<u8> = self.mask.iter().map(|&v| quantize(v)).collect();
        encode_pgm(self.side, self.side, &px).expect("square grid")
    }

    pub fn observation_pgm(&self) -> Vec<u8> {
        let px: Vec<u8> = self.observation.iter().map(|&v| quantize(v)).collect();
        encode_pgm(self.size, self.size, &px).expect("square frame")
    }

    pub fn overlay_ppm(&self) -> Vec<u8> {
        let rgb = overlay(&self.upsampled, &self.observation).expect("same size");
        encode_ppm(self.size, self.size, &rgb).expect("square frame")
    }

    pub fn mask_file_name(&self) -> String {
        format!("{}_{}_{}.pgm", self.branch.name(), self.episode, self.t)
    }

    pub fn overlay_file_name(&self) -> String {
        format!("overlay_{}_{}_{}.ppm", self.branch.name(), self.episode, self.t)
    }
}

pub fn observation_file_name(episode: usize, t: usize) -> String {
    format!("obs_{episode}_{t}.pgm")
}

pub fn index_file_name(episode: usize) -> String {
    format!("index_{episode}.csv")
}

/// What `record_heatmaps` wrote.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeatmapRun {
    pub episode_lengths: Vec<usize>,
    pub returns: Vec<f64>,
    pub files: Vec<PathBuf>,
}

/// Plays `episodes` greedy episodes and writes, per timestep, each enabled
/// mask as a native-resolution PGM, the observation as a PGM and a red
/// overlay PPM at observation size, plus one `index_<episode>.csv` per
/// episode with columns `t,action,value,policy_entropy`.
pub fn record_heatmaps<T: Real>(
    weights: &Weights<T>,
    cfg: &NetworkConfig,
    env_spec: &EnvSpec,
    episodes: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<HeatmapRun> {
    if !cfg.policy_mask && !cfg.value_mask {
        return Err(Error::VariantMismatch(
            "heatmaps need a masked variant, checkpoint is vanilla".into(),
        ));
    }
    weights.validate(cfg)?;
    check_env(cfg, env_spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut session = InferenceSession::new(weights, cfg)?;
    let mut env = env_spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = HeatmapRun::default();
    for episode in 0..episodes {
        let mut index = String::from("t,action,value,policy_entropy\n");
        let mut files = Vec::new();
        let env_seed = rng.gen();
        let (ret, len) = play_episode(
            &mut session,
            &mut env,
            env_seed,
            MaskTransform::Identity,
            true,
            &mut rng,
            |t, obs, trace, action| {
                index.push_str(&format!("{t},{action},{},{}\n", trace.value.as_f64(), trace.entropy()));
                let frames = HeatmapFrame::from_trace(episode, t, obs, trace, action)?;
                let obs_path = out_dir.join(observation_file_name(episode, t));
                write_file(&obs_path, &frames[0].observation_pgm())?;
                files.push(obs_path);
                for f in &frames {
                    let p = out_dir.join(f.mask_file_name());
                    write_file(&p, &f.mask_pgm())?;
                    files.push(p);
                    let p = out_dir.join(f.overlay_file_name());
                    write_file(&p, &f.overlay_ppm())?;
                    files.push(p);
                }
                Ok(())
            },
        )?;
        let index_path = out_dir.join(index_file_name(episode));
        write_file(&index_path, index.as_bytes())?;
        files.push(index_path);
        run.files.extend(files);
        run.episode_lengths.push(len);
        run.returns.push(ret);
    }
    Ok(run)
}
