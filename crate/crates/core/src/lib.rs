pub mod analysis;
pub mod autodiff;
pub mod cli;
pub mod envs;
pub mod error;
pub mod network;
pub mod training;

pub use error::{Error, Result};
