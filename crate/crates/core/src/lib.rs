//! Robust polynomial regression by mini-batch gradient descent with
//! per-batch loss trimming, together with the synthetic contamination
//! benchmark used to compare it against plain mini-batch descent.

pub mod bench;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod loss;
pub mod optimizer;
pub mod preprocess;
pub mod types;

pub use error::{Error, Result};
pub use loss::LossKind;
pub use optimizer::{fit, fit_pair, FitResult};
pub use types::{Dataset, ModelConfig, Sample, ScaleParams, WeightVector};
