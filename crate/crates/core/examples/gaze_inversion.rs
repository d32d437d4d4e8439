//! Trains a masked catch agent, then evaluates it with its policy mask
//! as learned, inverted, and replaced by ones.
//!
//! `cargo run --release --example gaze_inversion -- [steps] [seed]`

use maskac::analysis::{decrease_rate, evaluate, random_baseline};
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{MaskTransform, NetworkConfig, Variant};
use maskac::training::{train, Hyperparams};

fn main() -> maskac::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(2e5) as u64;
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let spec = EnvSpec::new(EnvKind::Catch, 20);
    let cfg = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Both);
    let hyper = Hyperparams {
        total_steps: steps,
        ..Hyperparams::desk()
    };
    let report = train::<f32>(&cfg, &hyper, &spec, seed, None)?;
    let mut means = Vec::new();
    for transform in [MaskTransform::Identity, MaskTransform::Inverse, MaskTransform::Ones] {
        let stats = evaluate(&report.weights, &cfg, &spec, 100, transform, seed + 1, true)?;
        println!("{:<8} {}", transform.name(), stats.summary());
        means.push(stats.mean);
    }
    let random = random_baseline(&spec, 100, seed + 1)?;
    println!("{:<8} {}", "random", random.summary());
    match decrease_rate(means[0], means[1]) {
        Ok(rate) => println!("decrease rate {rate:.2}%"),
        Err(e) => println!("decrease rate undefined: {e}"),
    }
    Ok(())
}
