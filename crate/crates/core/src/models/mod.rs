// SPDX-License-Identifier: MIT OR Apache-2.0

//! Baseline forecasters over window summary features.

pub mod features;
pub mod knn;
pub mod mlp;
pub mod ridge;

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Window;
use crate::error::{Error, Result};
pub use features::{extract_features, FeatureVector, Standardizer};
pub use mlp::Mlp;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Predicts the last observed target value.
    Persistence,
    Ridge { lambda: f64 },
    Knn { k: usize },
    Mlp {
        hidden_units: usize,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Ridge { lambda } if !(lambda.is_finite() && lambda >= 0.0) => {
                Err(Error::config("model.lambda", "must be finite and >= 0"))
            }
            ModelSpec::Knn { k: 0 } => Err(Error::config("model.k", "must be >= 1")),
            ModelSpec::Mlp { hidden_units: 0, .. } => Err(Error::config("model.hidden_units", "must be >= 1")),
            ModelSpec::Mlp { epochs: 0, .. } => Err(Error::config("model.epochs", "must be >= 1")),
            ModelSpec::Mlp { learning_rate, .. } if !(learning_rate.is_finite() && learning_rate > 0.0) => {
                Err(Error::config("model.learning_rate", "must be > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Persistence => "persistence",
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Mlp { .. } => "mlp",
        }
    }

    /// Copy with a different initialization seed; a no-op for models
    /// without one.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        match self {
            ModelSpec::Mlp {
                hidden_units,
                epochs,
                learning_rate,
                ..
            } => ModelSpec::Mlp {
                hidden_units: *hidden_units,
                epochs: *epochs,
                learning_rate: *learning_rate,
                seed: new_seed,
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowShape {
    pub rows: usize,
    pub cols: usize,
}

impl WindowShape {
    pub fn of(window: &Window<'_>) -> Self {
        Self {
            rows: window.rows(),
            cols: window.cols(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.cols * features::STATS_PER_CHANNEL
    }
}

/// A fitted model, serializable as self-describing JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TrainedModel {
    Persistence {
        shape: WindowShape,
        target_channel: usize,
    },
    Ridge {
        shape: WindowShape,
        lambda: f64,
        standardizer: Standardizer,
        coefficients: Vec<f64>,
        intercept: f64,
    },
    Knn {
        shape: WindowShape,
        k: usize,
        standardizer: Standardizer,
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
    Mlp {
        shape: WindowShape,
        standardizer: Standardizer,
        target_mean: f64,
        target_scale: f64,
        network: Mlp,
    },
}

/// Fits `spec` on windows and their targets.
pub fn fit(spec: &ModelSpec, windows: &[Window<'_>], targets: &[f64], target_channel: usize) -> Result<TrainedModel> {
    let first = windows.first().ok_or(Error::EmptyInput)?;
    let shape = WindowShape::of(first);
    let features = windows
        .iter()
        .map(|w| {
            if WindowShape::of(w) != shape {
                return Err(shape_error(shape, w));
            }
            extract_features(w)
        })
        .collect::<Result<Vec<_>>>()?;
    fit_features(spec, &features, targets, shape, target_channel)
}

/// Fits `spec` on precomputed feature vectors.
pub fn fit_features(
    spec: &ModelSpec,
    features: &[FeatureVector],
    targets: &[f64],
    shape: WindowShape,
    target_channel: usize,
) -> Result<TrainedModel> {
    spec.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    if features.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: targets.len(),
        });
    }
    if let Some(f) = features.iter().find(|f| f.len() != shape.feature_dim()) {
        return Err(Error::LengthMismatch {
            left: shape.feature_dim(),
            right: f.len(),
        });
    }
    if target_channel >= shape.cols {
        return Err(Error::UnknownChannel(format!("#{target_channel}")));
    }
    if spec == &ModelSpec::Persistence {
        return Ok(TrainedModel::Persistence { shape, target_channel });
    }

    let standardizer = Standardizer::fit(features)?;
    let z: Vec<Vec<f64>> = features.iter().map(|f| standardizer.transform(&f.0)).collect();
    Ok(match *spec {
        ModelSpec::Persistence => unreachable!(),
        ModelSpec::Ridge { lambda } => {
            let (coefficients, intercept) = ridge::solve(&z, targets, lambda)?;
            TrainedModel::Ridge {
                shape,
                lambda,
                standardizer,
                coefficients,
                intercept,
            }
        }
        ModelSpec::Knn { k } => {
            if k > z.len() {
                return Err(Error::KTooLarge { k, n: z.len() });
            }
            TrainedModel::Knn {
                shape,
                k,
                standardizer,
                features: z,
                targets: targets.to_vec(),
            }
        }
        ModelSpec::Mlp {
            hidden_units,
            epochs,
            learning_rate,
            seed,
        } => {
            let n = targets.len() as f64;
            let target_mean = targets.iter().sum::<f64>() / n;
            let sd = (targets.iter().map(|y| (y - target_mean).powi(2)).sum::<f64>() / n).sqrt();
            let target_scale = if sd > 0.0 { sd } else { 1.0 };
            let ys: Vec<f64> = targets.iter().map(|y| (y - target_mean) / target_scale).collect();
            let network = mlp::fit(&z, &ys, hidden_units, epochs, learning_rate, seed);
            TrainedModel::Mlp {
                shape,
                standardizer,
                target_mean,
                target_scale,
                network,
            }
        }
    })
}

fn shape_error(shape: WindowShape, w: &Window<'_>) -> Error {
    Error::ShapeMismatch {
        rows: shape.rows,
        cols: shape.cols,
        found_rows: w.rows(),
        found_cols: w.cols(),
    }
}

impl TrainedModel {
    pub fn shape(&self) -> WindowShape {
        match self {
            TrainedModel::Persistence { shape, .. }
            | TrainedModel::Ridge { shape, .. }
            | TrainedModel::Knn { shape, .. }
            | TrainedModel::Mlp { shape, .. } => *shape,
        }
    }

    pub fn predict(&self, window: &Window<'_>) -> Result<f64> {
        let shape = self.shape();
        if WindowShape::of(window) != shape {
            return Err(shape_error(shape, window));
        }
        if let TrainedModel::Persistence { target_channel, .. } = self {
            return Ok(window.get(window.rows() - 1, *target_channel));
        }
        self.predict_features(&extract_features(window)?)
    }

    pub fn predict_features(&self, features: &FeatureVector) -> Result<f64> {
        let dim = self.shape().feature_dim();
        if features.len() != dim {
            return Err(Error::LengthMismatch {
                left: dim,
                right: features.len(),
            });
        }
        Ok(match self {
            TrainedModel::Persistence { target_channel, .. } => features.last(*target_channel),
            TrainedModel::Ridge {
                standardizer,
                coefficients,
                intercept,
                ..
            } => {
                let z = standardizer.transform(&features.0);
                intercept + z.iter().zip(coefficients).map(|(a, b)| a * b).sum::<f64>()
            }
            TrainedModel::Knn {
                k,
                standardizer,
                features: stored,
                targets,
                ..
            } => knn::predict(stored, targets, *k, &standardizer.transform(&features.0)),
            TrainedModel::Mlp {
                standardizer,
                target_mean,
                target_scale,
                network,
                ..
            } => target_mean + target_scale * network.forward(&standardizer.transform(&features.0)),
        })
    }

    /// Ridge coefficients and intercept in raw feature units.
    pub fn raw_linear_coefficients(&self) -> Option<(Vec<f64>, f64)> {
        let TrainedModel::Ridge {
            standardizer,
            coefficients,
            intercept,
            ..
        } = self
        else {
            return None;
        };
        let raw: Vec<f64> = coefficients
            .iter()
            .zip(&standardizer.scale)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        let offset = raw.iter().zip(&standardizer.mean).map(|(b, m)| b * m).sum::<f64>();
        Some((raw, intercept - offset))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
