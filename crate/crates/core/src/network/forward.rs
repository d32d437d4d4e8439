use super::config::{Branch, MaskTransform, NetworkConfig};
use super::weights::{Weights, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use crate::autodiff::{sigmoid, Gradients, Graph, Real, Tensor, Var};
use crate::error::{Error, Result};

/// ConvLSTM hidden and cell maps carried across the steps of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState<T> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

impl<T: Real> RecurrentState<T> {
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        let side = cfg.feature_hw();
        let shape = [cfg.lstm_channels, side, side];
        Self {
            h: Tensor::zeros(&shape),
            c: Tensor::zeros(&shape),
        }
    }
}

/// A single-channel attention map kept as its pre-sigmoid logits.
///
/// Inversion negates the logits, using `sigmoid(-z) = 1 - sigmoid(z)`, so
/// inverting twice reproduces the original map bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask<T> {
    logits: Tensor<T>,
    values: Tensor<T>,
}

impl<T: Real> Mask<T> {
    pub fn from_logits(logits: Tensor<T>) -> Self {
        let values =
            Tensor::new(logits.shape(), logits.data().iter().map(|&z| sigmoid(z)).collect()).expect("same shape");
        Self { logits, values }
    }

    pub fn logits(&self) -> &Tensor<T> {
        &self.logits
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn invert(&self) -> Self {
        let neg =
            Tensor::new(self.logits.shape(), self.logits.data().iter().map(|&z| -z).collect()).expect("same shape");
        Self::from_logits(neg)
    }

    pub fn mean(&self) -> f64 {
        let d = self.values.data();
        d.iter().map(|x| x.as_f64()).sum::<f64>() / d.len() as f64
    }
}

/// Everything one forward pass produced.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    pub obs: Tensor<T>,
    /// Extractor output, the ConvLSTM input.
    pub f_fe: Tensor<T>,
    /// ConvLSTM output, the input of both branches and both mask modules.
    pub lstm_out: Tensor<T>,
    pub m_p: Option<Mask<T>>,
    pub m_v: Option<Mask<T>>,
    /// Masks as multiplied into the branches after the transform.
    pub m_p_applied: Option<Tensor<T>>,
    pub m_v_applied: Option<Tensor<T>>,
    pub f_p: Tensor<T>,
    pub f_v: Tensor<T>,
    pub f_p_masked: Tensor<T>,
    pub f_v_masked: Tensor<T>,
    pub policy: Vec<T>,
    pub log_policy: Vec<T>,
    pub value: T,
    pub next_state: RecurrentState<T>,
}

impl<T: Real> ForwardTrace<T> {
    pub fn mask(&self, branch: Branch) -> Option<&Mask<T>> {
        match branch {
            Branch::Policy => self.m_p.as_ref(),
            Branch::Value => self.m_v.as_ref(),
        }
    }

    pub fn greedy_action(&self) -> usize {
        argmax(&self.policy)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .policy
            .iter()
            .zip(&self.log_policy)
            .map(|(p, l)| p.as_f64() * l.as_f64())
            .sum::<f64>()
    }
}

pub(crate) fn argmax<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    w: Var,
    b: Var,
}

#[derive(Clone, Copy, Debug)]
struct BranchVars {
    mask: Option<Pair>,
    conv: Pair,
    fc: Pair,
}

/// Weights recorded as graph leaves, resolved once per graph.
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: Vec<Var>,
    fe: [Pair; 3],
    lstm: Pair,
    policy: BranchVars,
    value: BranchVars,
}

impl BoundParams {
    /// Records every tensor of `w` on `g`, in weight order. With
    /// `trainable = false` the leaves are constants.
    pub fn bind<T: Real>(g: &mut Graph<T>, w: &Weights<T>, cfg: &NetworkConfig, trainable: bool) -> Result<Self> {
        w.validate(cfg)?;
        let vars: Vec<Var> = w
            .tensors()
            .iter()
            .map(|t| {
                let d = t.data().to_vec();
                if trainable {
                    g.param(t.shape(), d)
                } else {
                    g.constant(t.shape(), d)
                }
            })
            .collect::<Result<_>>()?;
        let pair = |prefix: &str| -> Pair {
            let w_i = w.position(&format!("{prefix}.weight")).expect("validated");
            let b_i = w.position(&format!("{prefix}.bias")).expect("validated");
            Pair {
                w: vars[w_i],
                b: vars[b_i],
            }
        };
        let branch = |b: Branch| BranchVars {
            mask: cfg.mask_enabled(b).then(|| pair(&format!("{}.mask", b.name()))),
            conv: pair(&format!("{}.conv", b.name())),
            fc: pair(&format!("{}.fc", b.name())),
        };
        Ok(Self {
            fe: [pair("fe.conv1"), pair("fe.conv2"), pair("fe.conv3")],
            lstm: pair("lstm"),
            policy: branch(Branch::Policy),
            value: branch(Branch::Value),
            vars,
        })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients aligned with the weight order (zeros for untouched leaves).
    pub fn gradients<T: Real>(&self, g: &Graph<T>, grads: &Gradients<T>) -> Vec<Vec<T>> {
        self.vars
            .iter()
            .map(|&v| {
                grads
                    .get(v)
                    .map(<[T]>::to_vec)
                    .unwrap_or_else(|| vec![T::zero(); g.value(v).len()])
            })
            .collect()
    }
}

/// Graph handles of one forward step.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    pub obs: Var,
    pub f_fe: Var,
    pub h: Var,
    pub c: Var,
    pub mask_logits_p: Option<Var>,
    pub mask_logits_v: Option<Var>,
    pub applied_p: Option<Var>,
    pub applied_v: Option<Var>,
    pub f_p: Var,
    pub f_v: Var,
    pub f_p_masked: Var,
    pub f_v_masked: Var,
    pub logits: Var,
    pub policy: Var,
    pub log_policy: Var,
    pub value: Var,
}

fn conv<T: Real>(g: &mut Graph<T>, x: Var, p: Pair, stride: usize, padding: usize) -> Result<Var> {
    g.conv2d(x, p.w, p.b, stride, padding)
}

pub(crate) fn extractor_on<T: Real>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    cfg: &NetworkConfig,
    obs: Var,
) -> Result<Var> {
    let mut x = obs;
    for stage in bound.fe {
        let y = conv(g, x, stage, cfg.conv_stride, cfg.conv_padding)?;
        x = g.relu(y);
    }
    Ok(x)
}

/// Returns `(h', c')`.
pub(crate) fn convlstm_on<T: Real>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    cfg: &NetworkConfig,
    x: Var,
    h: Var,
    c: Var,
) -> Result<(Var, Var)> {
    if g.shape(h) != g.shape(c) || g.shape(h)[1..] != g.shape(x)[1..] {
        return Err(Error::InvalidShape(format!(
            "ConvLSTM input {:?}, h {:?}, c {:?}",
            g.shape(x),
            g.shape(h),
            g.shape(c)
        )));
    }
    let l = cfg.lstm_channels;
    if g.shape(h)[0] != l {
        return Err(Error::InvalidShape(format!(
            "ConvLSTM state has {} channels, expected {l}",
            g.shape(h)[0]
        )));
    }
    let xh = g.concat(&[x, h])?;
    let gates = conv(g, xh, bound.lstm, 1, 1)?;
    let gi = g.slice(gates, GATE_INPUT * l, l)?;
    let gf = g.slice(gates, GATE_FORGET * l, l)?;
    let go = g.slice(gates, GATE_OUTPUT * l, l)?;
    let gc = g.slice(gates, GATE_CELL * l, l)?;
    let i = g.sigmoid(gi);
    let f = g.sigmoid(gf);
    let o = g.sigmoid(go);
    let cand = g.tanh(gc);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let squashed = g.tanh(c_next);
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}

fn branch_vars(bound: &BoundParams, branch: Branch) -> BranchVars {
    match branch {
        Branch::Policy => bound.policy,
        Branch::Value => bound.value,
    }
}

/// Pre-sigmoid logits of a branch mask: 1×1 convolution of `h` to one channel.
pub(crate) fn mask_logits_on<T: Real>(g: &mut Graph<T>, bound: &BoundParams, h: Var, branch: Branch) -> Result<Var> {
    let p = branch_vars(bound, branch)
        .mask
        .ok_or_else(|| Error::VariantMismatch(format!("{} mask is not enabled", branch.name())))?;
    conv(g, h, p, 1, 0)
}

struct BranchOut {
    mask_logits: Option<Var>,
    applied: Option<Var>,
    features: Var,
    masked: Var,
    out: Var,
}

fn branch_on<T: Real>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    cfg: &NetworkConfig,
    h: Var,
    branch: Branch,
    transform: MaskTransform,
) -> Result<BranchOut> {
    let vars = branch_vars(bound, branch);
    let pre = conv(g, h, vars.conv, 1, 1)?;
    let features = g.relu(pre);
    let (mask_logits, applied, masked) = if cfg.mask_enabled(branch) {
        let z = mask_logits_on(g, bound, h, branch)?;
        let invert = match branch {
            Branch::Policy => true,
            Branch::Value => cfg.invert_value_mask,
        };
        let applied = match transform {
            MaskTransform::Identity => g.sigmoid(z),
            MaskTransform::Inverse if invert => {
                let neg = g.scale(z, -T::one());
                g.sigmoid(neg)
            }
            MaskTransform::Inverse => g.sigmoid(z),
            MaskTransform::Ones => {
                let n = g.value(z).len();
                g.constant(g.shape(z).to_vec().as_slice(), vec![T::one(); n])?
            }
        };
        let masked = g.broadcast_mul_channelwise(features, applied)?;
        (Some(z), Some(applied), masked)
    } else {
        (None, None, features)
    };
    let out = g.dense(masked, vars.fc.w, vars.fc.b)?;
    Ok(BranchOut {
        mask_logits,
        applied,
        features,
        masked,
        out,
    })
}

/// Records one full forward step on `g`.
pub fn forward_on<T: Real>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    cfg: &NetworkConfig,
    obs: Var,
    h: Var,
    c: Var,
    transform: MaskTransform,
) -> Result<StepVars> {
    let side = cfg.input_hw;
    if g.shape(obs) != [1, side, side] {
        return Err(Error::InvalidShape(format!(
            "observation shape {:?}, expected [1, {side}, {side}]",
            g.shape(obs)
        )));
    }
    let f_fe = extractor_on(g, bound, cfg, obs)?;
    let (h_next, c_next) = convlstm_on(g, bound, cfg, f_fe, h, c)?;
    let p = branch_on(g, bound, cfg, h_next, Branch::Policy, transform)?;
    let v = branch_on(g, bound, cfg, h_next, Branch::Value, transform)?;
    let policy = g.softmax(p.out)?;
    let log_policy = g.log_softmax(p.out)?;
    Ok(StepVars {
        obs,
        f_fe,
        h: h_next,
        c: c_next,
        mask_logits_p: p.mask_logits,
        mask_logits_v: v.mask_logits,
        applied_p: p.applied,
        applied_v: v.applied,
        f_p: p.features,
        f_v: v.features,
        f_p_masked: p.masked,
        f_v_masked: v.masked,
        logits: p.out,
        policy,
        log_policy,
        value: v.out,
    })
}

impl StepVars {
    pub fn materialize<T: Real>(&self, g: &Graph<T>) -> ForwardTrace<T> {
        let mask = |z: Option<Var>| z.map(|z| Mask::from_logits(g.tensor(z)));
        ForwardTrace {
            obs: g.tensor(self.obs),
            f_fe: g.tensor(self.f_fe),
            lstm_out: g.tensor(self.h),
            m_p: mask(self.mask_logits_p),
            m_v: mask(self.mask_logits_v),
            m_p_applied: self.applied_p.map(|v| g.tensor(v)),
            m_v_applied: self.applied_v.map(|v| g.tensor(v)),
            f_p: g.tensor(self.f_p),
            f_v: g.tensor(self.f_v),
            f_p_masked: g.tensor(self.f_p_masked),
            f_v_masked: g.tensor(self.f_v_masked),
            policy: g.value(self.policy).to_vec(),
            log_policy: g.value(self.log_policy).to_vec(),
            value: g.item(self.value),
            next_state: RecurrentState {
                h: g.tensor(self.h),
                c: g.tensor(self.c),
            },
        }
    }
}

/// Forward passes without gradients, reusing one graph whose parameter
/// leaves are recorded once.
pub struct InferenceSession<T> {
    graph: Graph<T>,
    bound: BoundParams,
    cfg: NetworkConfig,
    base: usize,
}

impl<T: Real> InferenceSession<T> {
    pub fn new(weights: &Weights<T>, cfg: &NetworkConfig) -> Result<Self> {
        let mut graph = Graph::new();
        let bound = BoundParams::bind(&mut graph, weights, cfg, false)?;
        let base = graph.len();
        Ok(Self {
            graph,
            bound,
            cfg: cfg.clone(),
            base,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn step(
        &mut self,
        obs: &Tensor<T>,
        state: &RecurrentState<T>,
        transform: MaskTransform,
    ) -> Result<ForwardTrace<T>> {
        self.graph.truncate(self.base);
        let g = &mut self.graph;
        let o = g.leaf(obs);
        let h = g.leaf(&state.h);
        let c = g.leaf(&state.c);
        let vars = forward_on(g, &self.bound, &self.cfg, o, h, c, transform)?;
        let trace = vars.materialize(g);
        self.graph.truncate(self.base);
        Ok(trace)
    }
}

/// Full forward pass: extractor, ConvLSTM, both branches.
pub fn forward<T: Real>(
    obs: &Tensor<T>,
    state: &RecurrentState<T>,
    w: &Weights<T>,
    cfg: &NetworkConfig,
    transform: MaskTransform,
) -> Result<ForwardTrace<T>> {
    InferenceSession::new(w, cfg)?.step(obs, state, transform)
}

/// Three stride-2 convolution + ReLU stages.
pub fn feature_extract<T: Real>(obs: &Tensor<T>, w: &Weights<T>, cfg: &NetworkConfig) -> Result<Tensor<T>> {
    let side = cfg.input_hw;
    if obs.shape() != [1, side, side] {
        return Err(Error::InvalidShape(format!(
            "observation shape {:?}, expected [1, {side}, {side}]",
            obs.shape()
        )));
    }
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, w, cfg, false)?;
    let o = g.leaf(obs);
    let out = extractor_on(&mut g, &bound, cfg, o)?;
    Ok(g.tensor(out))
}

/// One ConvLSTM step; returns the new hidden map and the carried state.
pub fn convlstm_step<T: Real>(
    x: &Tensor<T>,
    state: &RecurrentState<T>,
    w: &Weights<T>,
    cfg: &NetworkConfig,
) -> Result<(Tensor<T>, RecurrentState<T>)> {
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, w, cfg, false)?;
    let xv = g.leaf(x);
    let h = g.leaf(&state.h);
    let c = g.leaf(&state.c);
    let (h2, c2) = convlstm_on(&mut g, &bound, cfg, xv, h, c)?;
    let h_out = g.tensor(h2);
    Ok((
        h_out.clone(),
        RecurrentState {
            h: h_out,
            c: g.tensor(c2),
        },
    ))
}

/// `sigmoid(conv1×1(h))` for an enabled branch.
pub fn compute_mask<T: Real>(h: &Tensor<T>, w: &Weights<T>, cfg: &NetworkConfig, branch: Branch) -> Result<Mask<T>> {
    if !cfg.mask_enabled(branch) {
        return Err(Error::VariantMismatch(format!(
            "{} mask is not enabled in the {} variant",
            branch.name(),
            cfg.variant()
        )));
    }
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, w, cfg, false)?;
    let hv = g.leaf(h);
    let z = mask_logits_on(&mut g, &bound, hv, branch)?;
    Ok(Mask::from_logits(g.tensor(z)))
}

/// `F' = F ⊙ M` with the single-channel `M` broadcast over channels.
pub fn apply_mask<T: Real>(f: &Tensor<T>, m: &Tensor<T>) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let fv = g.leaf(f);
    let mv = g.leaf(m);
    let out = g.broadcast_mul_channelwise(fv, mv)?;
    Ok(g.tensor(out))
}

/// `1 - m` on raw mask values in `[0, 1]`.
///
/// For an exact involution keep the mask as a [`Mask`] and use
/// [`Mask::invert`]; `1 - (1 - m)` rounds for some `m < 0.5`.
pub fn invert_mask<T: Real>(m: &Tensor<T>) -> Result<Tensor<T>> {
    if let Some(bad) = m.data().iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
        return Err(Error::InvalidArgument(format!("mask value {bad} outside [0, 1]")));
    }
    Tensor::new(m.shape(), m.data().iter().map(|&x| T::one() - x).collect())
}
