//! Writes per-frame mask heatmaps, observations and overlays for one greedy
//! episode of a freshly trained catch agent.
//!
//! `cargo run --release --example heatmaps -- [out_dir] [steps] [seed]`

use std::path::PathBuf;

use maskac::analysis::record_heatmaps;
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{NetworkConfig, Variant};
use maskac::training::{train, Hyperparams};

fn main() -> maskac::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| PathBuf::from("heatmaps"), PathBuf::from);
    let steps = args.next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(5e4) as u64;
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let spec = EnvSpec::new(EnvKind::Catch, 20);
    let cfg = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Both);
    let hyper = Hyperparams {
        total_steps: steps,
        ..Hyperparams::desk()
    };
    let report = train::<f32>(&cfg, &hyper, &spec, seed, None)?;
    let run = record_heatmaps(&report.weights, &cfg, &spec, 1, seed, &out)?;
    println!(
        "episode of {} frames, return {}, {} files in {}",
        run.episode_lengths[0],
        run.returns[0],
        run.files.len(),
        out.display()
    );
    Ok(())
}
