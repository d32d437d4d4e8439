//! Trains all four variants on catch over a few seeds and prints the
//! max/mean table.
//!
//! `cargo run --release --example compare_variants -- [steps] [n_seeds]`

use maskac::analysis::compare_variants_with;
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{NetworkConfig, Variant};
use maskac::training::Hyperparams;

fn main() -> maskac::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(2e5) as u64;
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);

    let spec = EnvSpec::new(EnvKind::Catch, 20);
    let base = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Vanilla);
    let hyper = Hyperparams {
        total_steps: steps,
        ..Hyperparams::desk()
    };
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let table = compare_variants_with(&base, &spec, &Variant::ALL, &seeds, &hyper, 100, None, |v, a| {
        eprintln!("{} seed {}: {}", v.name(), a.seed, a.stats.summary());
    })?;
    print!("{}", table.to_table());
    Ok(())
}
