// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weight-based under-sampling for imbalanced time-series forecasting.
//!
//! The pipeline has three stages:
//!
//! 1. [`weights`] assigns every window position an importance weight, for
//!    example the absolute change of the target over the forecast horizon.
//! 2. [`sampling`] turns weights into inclusion probabilities (threshold,
//!    stochastic power, or inverse histogram) and draws fixed-size samples
//!    without replacement; [`histogram`] compares the weight density before
//!    and after sampling.
//! 3. [`evaluation`] trains a [`models`] baseline on each training sampler,
//!    scores it on every evaluation sampler, and picks the training sampler
//!    with the smallest worst-case RMSE.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the default
//! `parallel` feature they run on rayon, otherwise sequentially. Seeds are
//! derived per task so both paths give bit-identical results.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod histogram;
pub mod models;
pub mod sampling;
pub mod seed;
pub mod weights;

pub use dataset::{
    generate_synthetic, load_csv, split_chronological, valid_indices, window_at, IndexRange, SyntheticConfig,
    TimeSeriesDataset, Window, WindowSpec,
};
pub use error::{Error, Result};
pub use evaluation::{cross_evaluate, max_error_row, rmse, select_sampler, CrossEvalConfig, EvalMatrix, SelectionResult};
pub use exec::Execution;
pub use histogram::{density_report, fd_bin_width, Binning, DensityReport, Histogram};
pub use models::{fit, ModelSpec, TrainedModel};
pub use sampling::{draw, inclusion_weight, SampleIndexSet, SamplerSpec};
pub use weights::{compute_weights, WeightFunctionSpec, WeightSeries};
