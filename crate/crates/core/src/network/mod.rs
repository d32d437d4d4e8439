//! Actor-critic network with optional mask-attention on each branch.
//!
//! ```text
//! obs ─ conv/ReLU ×3 ─ ConvLSTM ─┬─ conv/ReLU ─ F_p ─⊙─ dense ─ softmax → π
//!                                │  1×1 conv ─ σ ─ M_p ┘
//!                                └─ conv/ReLU ─ F_v ─⊙─ dense → V
//!                                   1×1 conv ─ σ ─ M_v ┘
//! ```
//!
//! Each mask is a single-channel map produced from the ConvLSTM output and
//! multiplied into every channel of its branch's feature map.

mod config;
mod forward;
mod weights;

pub use config::{Branch, MaskTransform, NetworkConfig, Variant};
pub use forward::{
    apply_mask, compute_mask, convlstm_step, feature_extract, forward, forward_on, invert_mask, BoundParams,
    ForwardTrace, InferenceSession, Mask, RecurrentState, StepVars,
};
pub use weights::{init_weights, Weights, FORGET_BIAS};
