//! Advantage actor-critic over n-step rollouts, with workers applying
//! updates asynchronously to one shared parameter store.

mod hyper;
mod loss;
mod rollout;
mod shared;
mod train;

pub use hyper::Hyperparams;
pub use loss::{a3c_loss, compute_returns, LossVars};
pub use rollout::{collect_rollout, replay, sample_categorical, Actor, Rollout, Transition};
pub use shared::{SharedParams, UpdateOutcome};
pub use train::{
    checkpoint_name, thread_count, train, train_from, worker_seed, MetricsRow, TrainReport, METRICS_HEADER, THREADS_ENV,
};
