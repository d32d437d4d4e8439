use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Branch, NetworkConfig};
use crate::autodiff::{ParamStore, Real, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    /// uniform(-k, k), k = 1/sqrt(fan_in)
    Uniform {
        fan_in: usize,
    },
    /// uniform(-k, k), k = sqrt(6/fan_in); kernels followed by ReLU
    He {
        fan_in: usize,
    },
    Zero,
    /// Zero everywhere except the forget-gate slice of the ConvLSTM bias.
    ForgetBias {
        channels: usize,
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

/// ConvLSTM gate slices inside the stacked gate tensor.
pub(crate) const GATE_INPUT: usize = 0;
pub(crate) const GATE_FORGET: usize = 1;
pub(crate) const GATE_OUTPUT: usize = 2;
pub(crate) const GATE_CELL: usize = 3;

pub const FORGET_BIAS: f64 = 1.0;

/// Ordered parameter names and shapes for a configuration.
pub(crate) fn layout(cfg: &NetworkConfig) -> Vec<ParamSpec> {
    let k = cfg.conv_kernel;
    let mut specs = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| specs.push(ParamSpec { name, shape, init });
    let mut c_in = 1;
    for (i, &c_out) in cfg.fe_channels.iter().enumerate() {
        push(
            format!("fe.conv{}.weight", i + 1),
            vec![c_out, c_in, k, k],
            Init::He { fan_in: c_in * k * k },
        );
        push(format!("fe.conv{}.bias", i + 1), vec![c_out], Init::Zero);
        c_in = c_out;
    }
    let l = cfg.lstm_channels;
    let lstm_in = cfg.fe_channels[2] + l;
    push(
        "lstm.weight".into(),
        vec![4 * l, lstm_in, 3, 3],
        Init::Uniform { fan_in: lstm_in * 9 },
    );
    push(
        "lstm.bias".into(),
        vec![4 * l],
        Init::ForgetBias {
            channels: l,
            value: FORGET_BIAS,
        },
    );
    let side = cfg.feature_hw();
    let b = cfg.branch_channels;
    for branch in [Branch::Policy, Branch::Value] {
        let p = branch.name();
        if cfg.mask_enabled(branch) {
            push(
                format!("{p}.mask.weight"),
                vec![1, l, 1, 1],
                Init::Uniform { fan_in: l },
            );
            push(format!("{p}.mask.bias"), vec![1], Init::Zero);
        }
        push(format!("{p}.conv.weight"), vec![b, l, 3, 3], Init::He { fan_in: l * 9 });
        push(format!("{p}.conv.bias"), vec![b], Init::Zero);
        let outputs = match branch {
            Branch::Policy => cfg.n_actions,
            Branch::Value => 1,
        };
        let flat = b * side * side;
        push(
            format!("{p}.fc.weight"),
            vec![outputs, flat],
            Init::Uniform { fan_in: flat },
        );
        push(format!("{p}.fc.bias"), vec![outputs], Init::Zero);
    }
    specs
}

/// Named parameter tensors of one network variant, in a fixed order that is
/// a pure function of the [`NetworkConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct Weights<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> Weights<T> {
    pub fn from_parts(names: Vec<String>, tensors: Vec<Tensor<T>>) -> Result<Self> {
        if names.len() != tensors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} tensors",
                names.len(),
                tensors.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate parameter name {n}")));
            }
        }
        Ok(Self { names, tensors, index })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index.get(name).map(|&i| &mut self.tensors[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Real>(&self) -> Weights<U> {
        Weights {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            index: self.index.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Checks names, order and shapes against the layout for `cfg`.
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let specs = layout(cfg);
        let names_match = specs.len() == self.names.len() && specs.iter().zip(&self.names).all(|(s, n)| &s.name == n);
        if !names_match {
            return Err(Error::VariantMismatch(format!(
                "weights hold {:?}, configuration ({} variant) expects {:?}",
                self.names,
                cfg.variant(),
                specs.iter().map(|s| &s.name).collect::<Vec<_>>()
            )));
        }
        for (spec, t) in specs.iter().zip(&self.tensors) {
            if spec.shape != t.shape() {
                return Err(Error::InvalidShape(format!(
                    "{}: shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
        }
        Ok(())
    }

    /// Copies the tensors whose names appear in the layout of `cfg`. Used to
    /// build e.g. the unmasked network that shares every other weight.
    pub fn restrict_to(&self, cfg: &NetworkConfig) -> Result<Weights<T>> {
        let specs = layout(cfg);
        let mut names = Vec::with_capacity(specs.len());
        let mut tensors = Vec::with_capacity(specs.len());
        for spec in specs {
            let t = self
                .get(&spec.name)
                .ok_or_else(|| Error::VariantMismatch(format!("missing parameter {}", spec.name)))?;
            if t.shape() != spec.shape {
                return Err(Error::InvalidShape(format!(
                    "{}: shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
            names.push(spec.name);
            tensors.push(t.clone());
        }
        Weights::from_parts(names, tensors)
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }
}

impl ParamStore for Weights<f64> {
    fn param_count(&self) -> usize {
        self.tensors.len()
    }

    fn param(&self, i: usize) -> &Tensor<f64> {
        &self.tensors[i]
    }

    fn param_mut(&mut self, i: usize) -> &mut Tensor<f64> {
        &mut self.tensors[i]
    }
}

/// Reproducible initialization: ReLU conv kernels uniform in
/// `±sqrt(6/fan_in)`, other kernels and dense weights in `±1/sqrt(fan_in)`,
/// biases zero except the ConvLSTM forget gate.
pub fn init_weights<T: Real>(cfg: &NetworkConfig, seed: u64) -> Result<Weights<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = layout(cfg);
    let mut names = Vec::with_capacity(specs.len());
    let mut tensors = Vec::with_capacity(specs.len());
    for spec in specs {
        let numel: usize = spec.shape.iter().product();
        let data: Vec<T> = match spec.init {
            Init::Uniform { fan_in } | Init::He { fan_in } => {
                let k = match spec.init {
                    Init::He { .. } => (6.0 / fan_in as f64).sqrt(),
                    _ => 1.0 / (fan_in as f64).sqrt(),
                };
                (0..numel).map(|_| T::from_f64(rng.gen_range(-k..k))).collect()
            }
            Init::Zero => vec![T::zero(); numel],
            Init::ForgetBias { channels, value } => {
                let mut d = vec![T::zero(); numel];
                d[GATE_FORGET * channels..(GATE_FORGET + 1) * channels].fill(T::from_f64(value));
                d
            }
        };
        tensors.push(Tensor::new(&spec.shape, data)?.with_requires_grad(true));
        names.push(spec.name);
    }
    Weights::from_parts(names, tensors)
}
