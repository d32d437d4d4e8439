use std::sync::{Mutex, MutexGuard};

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::network::Weights;

use super::hyper::Hyperparams;

struct Store<T> {
    weights: Weights<T>,
    sq_avg: Vec<Vec<T>>,
    steps: u64,
    version: u64,
    skipped: u64,
}

/// Global parameters, shared RMSProp statistics and the global step counter
/// behind one exclusive lock. Snapshots and updates are whole-store atomic.
pub struct SharedParams<T> {
    store: Mutex<Store<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateOutcome {
    /// False when the gradient was non-finite and the update was skipped.
    pub applied: bool,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Parameter version after this call.
    pub version: u64,
    /// Global step counter after this call.
    pub global_steps: u64,
}

impl<T: Real> SharedParams<T> {
    pub fn new(weights: Weights<T>) -> Self {
        let sq_avg = weights.tensors().iter().map(|t| vec![T::zero(); t.numel()]).collect();
        Self {
            store: Mutex::new(Store {
                weights,
                sq_avg,
                steps: 0,
                version: 0,
                skipped: 0,
            }),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Store<T>> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Independent copy of the current global weights.
    pub fn sync_local(&self) -> Weights<T> {
        self.lock().weights.clone()
    }

    pub fn snapshot_versioned(&self) -> (u64, Weights<T>) {
        let s = self.lock();
        (s.version, s.weights.clone())
    }

    pub fn global_steps(&self) -> u64 {
        self.lock().steps
    }

    pub fn skipped_updates(&self) -> u64 {
        self.lock().skipped
    }

    pub fn version(&self) -> u64 {
        self.lock().version
    }

    /// Counts steps whose update was dropped before any gradient existed
    /// (for example a non-finite loss).
    pub fn record_skip(&self, contributed_steps: u64) -> u64 {
        let mut s = self.lock();
        s.steps += contributed_steps;
        s.skipped += 1;
        s.steps
    }

    /// Global-norm clip followed by one shared RMSProp step:
    /// `s ← ρ s + (1-ρ) g²`, `θ ← θ - lr · g / sqrt(s + ε)`.
    ///
    /// A non-finite gradient leaves θ and the statistics untouched; the
    /// contributed steps are counted either way.
    pub fn apply_gradients(
        &self,
        grads: &[Vec<T>],
        contributed_steps: u64,
        hyper: &Hyperparams,
    ) -> Result<UpdateOutcome> {
        let mut s = self.lock();
        if grads.len() != s.weights.len() || grads.iter().zip(s.weights.tensors()).any(|(g, t)| g.len() != t.numel()) {
            return Err(Error::InvalidShape(
                "gradient layout does not match the shared weights".into(),
            ));
        }
        s.steps += contributed_steps;
        let norm = grads
            .iter()
            .flatten()
            .map(|g| {
                let g = g.as_f64();
                g * g
            })
            .sum::<f64>()
            .sqrt();
        if !norm.is_finite() {
            s.skipped += 1;
            return Ok(UpdateOutcome {
                applied: false,
                grad_norm: norm,
                version: s.version,
                global_steps: s.steps,
            });
        }
        let clip = if norm > hyper.grad_clip_norm {
            Some(T::from_f64(hyper.grad_clip_norm / norm))
        } else {
            None
        };
        let decay = T::from_f64(hyper.rms_decay);
        let keep = T::from_f64(1.0 - hyper.rms_decay);
        let eps = T::from_f64(hyper.rms_eps);
        let lr = T::from_f64(hyper.lr);
        let Store { weights, sq_avg, .. } = &mut *s;
        for ((t, sq), g) in weights.tensors_mut().iter_mut().zip(sq_avg.iter_mut()).zip(grads) {
            for ((theta, s2), &g) in t.data_mut().iter_mut().zip(sq.iter_mut()).zip(g) {
                let g = match clip {
                    Some(c) => g * c,
                    None => g,
                };
                *s2 = decay * *s2 + keep * g * g;
                *theta = *theta - lr * g / (*s2 + eps).sqrt();
            }
        }
        s.version += 1;
        Ok(UpdateOutcome {
            applied: true,
            grad_norm: norm,
            version: s.version,
            global_steps: s.steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn tiny() -> Weights<f64> {
        Weights::from_parts(
            vec!["a".into(), "b".into()],
            vec![
                Tensor::from_f64(&[2], &[1.0, -1.0]).unwrap(),
                Tensor::from_f64(&[1], &[0.5]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_keeps_theta_and_counts_steps() {
        let shared = SharedParams::new(tiny());
        let out = shared
            .apply_gradients(&[vec![0.0, 0.0], vec![0.0]], 5, &Hyperparams::default())
            .unwrap();
        assert!(out.applied);
        assert_eq!(out.global_steps, 5);
        assert_eq!(shared.sync_local(), tiny());
    }

    #[test]
    fn snapshot_is_not_aliased() {
        let shared = SharedParams::new(tiny());
        let snap = shared.sync_local();
        assert_eq!(snap, tiny());
        shared
            .apply_gradients(&[vec![1.0, 1.0], vec![1.0]], 1, &Hyperparams::default())
            .unwrap();
        assert_eq!(snap, tiny());
        assert_ne!(shared.sync_local(), tiny());
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let shared = SharedParams::new(tiny());
        let out = shared
            .apply_gradients(&[vec![f64::NAN, 0.0], vec![0.0]], 3, &Hyperparams::default())
            .unwrap();
        assert!(!out.applied);
        assert_eq!(out.global_steps, 3);
        assert_eq!(shared.skipped_updates(), 1);
        assert_eq!(shared.sync_local(), tiny());
    }

    #[test]
    fn layout_mismatch_is_an_error() {
        let shared = SharedParams::new(tiny());
        assert!(shared
            .apply_gradients(&[vec![0.0, 0.0]], 1, &Hyperparams::default())
            .is_err());
    }
}
