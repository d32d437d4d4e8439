//! Reverse-mode automatic differentiation over dense row-major tensors.
//!
//! Operations are recorded on a [`Graph`] tape as they execute; a single
//! [`Graph::backward`] call then sweeps the tape in reverse and returns the
//! gradient of every leaf that asked for one. The operator set is exactly
//! what the actor-critic network needs: zero-padded 2-D convolution, dense
//! layers, elementwise activations, channel-broadcast masking, softmax and
//! a handful of reductions.

mod check;
mod graph;
mod tensor;

pub use check::{grad_check, GradCheckReport, ParamStore};
pub use graph::{sigmoid, softmax, ConvGeom, Gradients, Graph, Var};
pub use tensor::{Real, Tensor};

#[cfg(test)]
mod tests;
