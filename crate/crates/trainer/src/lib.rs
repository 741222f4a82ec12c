//! Gradient training of integer-distribution heads on tabular data.
//!
//! A [`Model`] is a one-hidden-layer perceptron whose outputs pass through a
//! [`HeadSpec`] to become the parameters of a (mixture) distribution, or a
//! plain prediction for the squared-error baseline. [`train`] sweeps learning
//! rates and keeps the validation-best model; [`Checkpoint`] stores it.

pub mod adam;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod head;
pub mod mlp;
pub mod train;

pub use checkpoint::Checkpoint;
pub use dataset::{Dataset, Split};
pub use error::{Result, TrainError};
pub use head::{HeadSpec, Loss};
pub use mlp::Mlp;
pub use train::{evaluate, evaluate_splits, initial_model, train, Metrics, Model, SplitMetrics, SweepPoint, TrainConfig, TrainOutcome};
