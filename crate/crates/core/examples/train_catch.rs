//! Trains a masked agent on catch with the desk preset and scores it.
//!
//! `cargo run --release --example train_catch -- [steps] [seed] [out_dir]`

use std::path::PathBuf;

use maskac::analysis::evaluate;
use maskac::cli::save_checkpoint;
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{MaskTransform, NetworkConfig, Variant};
use maskac::training::{train, Hyperparams};

fn main() -> maskac::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(2e5) as u64;
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.next().map(PathBuf::from);

    let spec = EnvSpec::new(EnvKind::Catch, 20);
    let cfg = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Both);
    let hyper = Hyperparams {
        total_steps: steps,
        ..Hyperparams::desk()
    };
    let report = train::<f32>(&cfg, &hyper, &spec, seed, out.as_deref())?;
    let returns = report.episode_returns();
    let tail = &returns[returns.len().saturating_sub(200)..];
    println!(
        "{} steps in {:.1}s ({:.0} steps/s), last {} training episodes mean {:.3}",
        report.global_steps,
        report.elapsed.as_secs_f64(),
        report.steps_per_second(),
        tail.len(),
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    );
    let stats = evaluate(
        &report.weights,
        &cfg,
        &spec,
        100,
        MaskTransform::Identity,
        seed + 1,
        true,
    )?;
    println!("greedy evaluation: {}", stats.summary());
    if let Some(dir) = out {
        let path = dir.join("final.ckpt");
        save_checkpoint(&report.weights, &cfg, &path)?;
        println!("saved {}", path.display());
    }
    Ok(())
}
