use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub lr: f64,
    /// RMSProp squared-gradient decay.
    pub rms_decay: f64,
    /// Added inside the RMSProp square root.
    pub rms_eps: f64,
    pub n_workers: usize,
    pub t_max: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub grad_clip_norm: f64,
    pub total_steps: u64,
    pub episode_step_cap: usize,
    /// Global steps between periodic checkpoints; 0 disables them.
    pub checkpoint_interval: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 1e-4,
            rms_decay: 0.99,
            rms_eps: 0.1,
            n_workers: 4,
            t_max: 20,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip_norm: 40.0,
            total_steps: 200_000,
            episode_step_cap: 10_000,
            checkpoint_interval: 50_000,
        }
    }
}

impl Hyperparams {
    /// Settings that learn the built-in games within a 2e5-step budget on
    /// a narrow network: lr 1e-3 and RMSProp ε 1e-5. With ε = 0.1 the
    /// denominator swamps the small per-element gradients of a sparse
    /// 20×20 frame and the policy stays uniform.
    pub fn desk() -> Self {
        Self {
            lr: 1e-3,
            rms_eps: 1e-5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must be in [0, 1]");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return fail("rms_decay must be in [0, 1)");
        }
        if self.rms_eps.is_nan() || self.rms_eps <= 0.0 {
            return fail("rms_eps must be positive");
        }
        if self.n_workers == 0 {
            return fail("n_workers must be at least 1");
        }
        if self.t_max == 0 {
            return fail("t_max must be at least 1");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return fail("loss coefficients must be non-negative");
        }
        if self.grad_clip_norm.is_nan() || self.grad_clip_norm <= 0.0 {
            return fail("grad_clip_norm must be positive");
        }
        if self.episode_step_cap == 0 {
            return fail("episode_step_cap must be positive");
        }
        Ok(())
    }
}
