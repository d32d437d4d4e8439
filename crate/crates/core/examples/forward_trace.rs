// Plays a few catch frames through an untrained masked network and prints
// what one forward pass exposes: action probabilities, value and the two
// attention masks.

use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{init_weights, Branch, InferenceSession, MaskTransform, NetworkConfig, RecurrentState, Variant};

pub struct TraceRow {
    pub frame: usize,
    pub action: usize,
    pub value: f64,
    pub policy: Vec<f64>,
    pub policy_mask_mean: f64,
    pub value_mask_mean: f64,
}

pub fn run_example() -> maskac::Result<Vec<TraceRow>> {
    let spec = EnvSpec::new(EnvKind::Catch, 20);
    let cfg = NetworkConfig::desk(spec.size, spec.n_actions(), Variant::Both);
    let weights = init_weights::<f32>(&cfg, 0)?;
    let mut session = InferenceSession::new(&weights, &cfg)?;
    let mut env = spec.build()?;
    let mut obs = env.reset(0);
    let mut state = RecurrentState::zeros(&cfg);
    let mut rows = Vec::new();
    for frame in 0..5 {
        let trace = session.step(&obs.to_tensor(), &state, MaskTransform::Identity)?;
        let action = trace.greedy_action();
        let mean = |b| trace.mask(b).map_or(f64::NAN, |m| m.mean());
        rows.push(TraceRow {
            frame,
            action,
            value: trace.value as f64,
            policy: trace.policy.iter().map(|&p| p as f64).collect(),
            policy_mask_mean: mean(Branch::Policy),
            value_mask_mean: mean(Branch::Value),
        });
        state = trace.next_state;
        let step = env.step(action)?;
        obs = step.obs;
        if step.done {
            break;
        }
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> maskac::Result<()> {
    for r in run_example()? {
        let p: Vec<String> = r.policy.iter().map(|p| format!("{p:.3}")).collect();
        println!(
            "t={} action={} value={:+.4} pi=[{}] mean m_p={:.3} m_v={:.3}",
            r.frame,
            r.action,
            r.value,
            p.join(" "),
            r.policy_mask_mean,
            r.value_mask_mean
        );
    }
    Ok(())
}
