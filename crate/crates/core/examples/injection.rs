// Trains a masked agent on the fuel game, then paints a full fuel gauge
// over the frame once the real gauge runs low and logs how the
// probability of surfacing reacts.
//
// `cargo run --release --example injection -- [steps] [seed]`

use maskac::analysis::{full_gauge_injection, injection_response, low_fuel_frame, SURFACE_ACTION};
use maskac::envs::{EnvKind, EnvSpec, InjectionDuration};
use maskac::network::{NetworkConfig, Variant};
use maskac::training::{train, Hyperparams};

pub struct InjectionOutcome {
    pub low_fuel_frame: Option<usize>,
    /// Mean surfacing probability over five frames before and after.
    pub pre_post: Option<(f64, f64)>,
    pub csv: Option<String>,
}

pub fn fuel_spec() -> EnvSpec {
    EnvSpec::new(EnvKind::Fuel, 20)
}

pub fn measure(steps: u64, seed: u64, fraction: f64) -> maskac::Result<InjectionOutcome> {
    let spec = fuel_spec();
    let cfg = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Both);
    let hyper = Hyperparams {
        total_steps: steps,
        ..Hyperparams::desk()
    };
    let report = train::<f32>(&cfg, &hyper, &spec, seed, None)?;
    let probe_seed = seed + 77;
    let frame = low_fuel_frame(
        &report.weights,
        &cfg,
        &spec,
        fraction,
        spec.episode_cap,
        probe_seed,
        true,
    )?;
    let Some(k) = frame else {
        return Ok(InjectionOutcome {
            low_fuel_frame: None,
            pre_post: None,
            csv: None,
        });
    };
    let injection = full_gauge_injection(spec.size, k, InjectionDuration::Permanent)?;
    let r = injection_response(&report.weights, &cfg, &spec, &injection, k + 5, probe_seed, true)?;
    Ok(InjectionOutcome {
        low_fuel_frame: Some(k),
        pre_post: r.pre_post(SURFACE_ACTION, 5),
        csv: Some(r.to_csv()),
    })
}

#[allow(dead_code)]
fn main() -> maskac::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse::<f64>().ok()).unwrap_or(2e5) as u64;
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = measure(steps, seed, 0.35)?;
    match (out.low_fuel_frame, out.pre_post) {
        (Some(k), Some((pre, post))) => {
            println!("low fuel at frame {k}: p(up) before {pre:.3}, after {post:.3}");
            print!("{}", out.csv.unwrap_or_default());
        }
        _ => println!("the agent never ran low on fuel"),
    }
    Ok(())
}
