// Finite-difference check of the actor-critic loss gradient for every
// network variant, in double precision.

use maskac::autodiff::grad_check;
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{init_weights, NetworkConfig, RecurrentState, Variant};
use maskac::training::{a3c_loss, collect_rollout, replay, Actor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worst relative error per variant over `samples` coordinates.
pub fn check_variant(variant: Variant, samples: usize, seed: u64) -> maskac::Result<f64> {
    let mut cfg = NetworkConfig::new(10, 3, variant);
    cfg.fe_channels = [4, 4, 6];
    cfg.lstm_channels = 5;
    cfg.branch_channels = 4;
    let mut weights = init_weights::<f64>(&cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Zero biases on a mostly black frame sit every ReLU exactly on its kink.
    for (name, t) in weights.names().to_vec().iter().zip(weights.tensors_mut()) {
        if name.ends_with("bias") {
            for x in t.data_mut() {
                *x += rng.gen_range(-0.1..0.1);
            }
        }
    }
    let mut actor = Actor::new(EnvSpec::new(EnvKind::Catch, 10).build()?, seed);
    let (rollout, _) = collect_rollout(&mut actor, &weights, &cfg, RecurrentState::zeros(&cfg), 3, &mut rng)?;
    let obs: Vec<_> = rollout.steps.iter().map(|s| s.obs.clone()).collect();
    let actions: Vec<_> = rollout.steps.iter().map(|s| s.action).collect();
    // Fixed targets so the checked function is smooth in the weights.
    let (returns, advantages) = rollout.returns(0.99);
    let rewards = rollout.rewards();
    let bootstrap = rollout.bootstrap_value;

    let loss_of = |w: &maskac::network::Weights<f64>, grad: bool| -> maskac::Result<(f64, Option<Vec<Vec<f64>>>)> {
        let zeros = RecurrentState::zeros(&cfg);
        let mut r = replay(w, &cfg, &zeros, &obs, &actions, &rewards, bootstrap, grad)?;
        let l = a3c_loss(&mut r.graph, &r.steps, &returns, &advantages, 0.01, 0.5)?;
        let value = r.graph.item(l.total);
        if !grad {
            return Ok((value, None));
        }
        let grads = r.graph.backward(l.total)?;
        Ok((value, Some(r.bound.gradients(&r.graph, &grads))))
    };
    let (_, analytic) = loss_of(&weights, true)?;
    let analytic = analytic.expect("requested");
    let report = grad_check(
        &mut weights,
        &analytic,
        |w| Ok(loss_of(w, false)?.0),
        1e-5,
        samples,
        seed,
    )?;
    Ok(report.max_rel_error)
}

pub fn run_example() -> maskac::Result<Vec<(Variant, f64)>> {
    Variant::ALL
        .into_iter()
        .map(|v| Ok((v, check_variant(v, 200, 7)?)))
        .collect()
}

#[allow(dead_code)]
fn main() -> maskac::Result<()> {
    for (v, err) in run_example()? {
        println!("{:<12} max relative error {err:.3e}", v.name());
    }
    Ok(())
}
