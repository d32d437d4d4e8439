use std::path::Path;

use super::eval::{evaluate, EpisodeStats};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::network::{MaskTransform, NetworkConfig, Variant, Weights};
use crate::training::{train, Hyperparams};

/// Evaluation episodes are seeded apart from the training run.
pub const EVAL_SEED_OFFSET: u64 = 1_000_003;

pub struct TrainedAgent {
    pub seed: u64,
    pub weights: Weights<f32>,
    pub stats: EpisodeStats,
    pub global_steps: u64,
}

pub struct VariantRow {
    pub variant: Variant,
    pub config: NetworkConfig,
    pub agents: Vec<TrainedAgent>,
}

impl VariantRow {
    /// The seed with the highest mean score (first one on ties).
    pub fn best(&self) -> &TrainedAgent {
        let mut best = &self.agents[0];
        for a in &self.agents[1..] {
            if a.stats.mean > best.stats.mean {
                best = a;
            }
        }
        best
    }
}

pub struct VariantTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<VariantRow>,
}

impl VariantTable {
    pub fn row(&self, variant: Variant) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// One row per variant: max/mean per seed, then the best-of-seeds cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("variant,policy_mask,value_mask");
        for seed in &self.seeds {
            s.push_str(&format!(",seed{seed}_max,seed{seed}_mean"));
        }
        s.push_str(",best_seed,best_max,best_mean\n");
        for row in &self.rows {
            s.push_str(&format!(
                "{},{},{}",
                row.variant.name(),
                u8::from(row.variant.policy_mask()),
                u8::from(row.variant.value_mask())
            ));
            for a in &row.agents {
                s.push_str(&format!(",{},{}", a.stats.max, a.stats.mean));
            }
            let b = row.best();
            s.push_str(&format!(",{},{},{}\n", b.seed, b.stats.max, b.stats.mean));
        }
        s
    }

    /// Best-of-seeds max and mean per variant, one row each.
    pub fn to_table(&self) -> String {
        let mut s = String::from("| Policy mask | Value mask | max | mean |\n|---|---|---|---|\n");
        let tick = |on: bool| if on { "x" } else { " " };
        for row in &self.rows {
            let b = row.best();
            s.push_str(&format!(
                "| {} | {} | {:.2} | {:.3} |\n",
                tick(row.variant.policy_mask()),
                tick(row.variant.value_mask()),
                b.stats.max,
                b.stats.mean
            ));
        }
        s
    }
}

/// Trains every variant on every seed, then scores each agent greedily
/// over `episodes`. `progress` is told about each finished agent.
#[allow(clippy::too_many_arguments)]
pub fn compare_variants_with<F>(
    base: &NetworkConfig,
    env_spec: &EnvSpec,
    variants: &[Variant],
    seeds: &[u64],
    hyper: &Hyperparams,
    episodes: usize,
    out_dir: Option<&Path>,
    mut progress: F,
) -> Result<VariantTable>
where
    F: FnMut(Variant, &TrainedAgent),
{
    if seeds.is_empty() || variants.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed and one variant".into()));
    }
    let mut rows = Vec::with_capacity(variants.len());
    for &variant in variants {
        let cfg = base.clone().with_variant(variant);
        let mut agents = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let dir = out_dir.map(|d| d.join(format!("{}_seed{seed}", variant.name())));
            let report = train::<f32>(&cfg, hyper, env_spec, seed, dir.as_deref())?;
            let stats = evaluate(
                &report.weights,
                &cfg,
                env_spec,
                episodes,
                MaskTransform::Identity,
                seed + EVAL_SEED_OFFSET,
                true,
            )?;
            let agent = TrainedAgent {
                seed,
                weights: report.weights,
                stats,
                global_steps: report.global_steps,
            };
            progress(variant, &agent);
            agents.push(agent);
        }
        rows.push(VariantRow {
            variant,
            config: cfg,
            agents,
        });
    }
    Ok(VariantTable {
        seeds: seeds.to_vec(),
        rows,
    })
}

pub fn compare_variants(
    base: &NetworkConfig,
    env_spec: &EnvSpec,
    seeds: &[u64],
    hyper: &Hyperparams,
    episodes: usize,
    out_dir: Option<&Path>,
) -> Result<VariantTable> {
    compare_variants_with(
        base,
        env_spec,
        &Variant::ALL,
        seeds,
        hyper,
        episodes,
        out_dir,
        |_, _| {},
    )
}
