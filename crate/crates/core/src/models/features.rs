// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::dataset::Window;
use crate::error::{Error, Result};

/// Per-channel window statistics in order mean, std, min, max, last.
pub const STATS_PER_CHANNEL: usize = 5;
pub const LAST_OFFSET: usize = 4;

/// Summary features of one window, channel-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Value of `channel` at the last window row.
    pub fn last(&self, channel: usize) -> f64 {
        self.0[channel * STATS_PER_CHANNEL + LAST_OFFSET]
    }
}

/// Mean, population std, min, max and last value of every channel.
pub fn extract_features(window: &Window<'_>) -> Result<FeatureVector> {
    let rows = window.rows();
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    let n = rows as f64;
    let mut out = Vec::with_capacity(window.cols() * STATS_PER_CHANNEL);
    for c in 0..window.cols() {
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in window.column(c) {
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        let mean = sum / n;
        let var = window.column(c).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        out.extend([mean, var.sqrt(), min, max, window.get(rows - 1, c)]);
    }
    Ok(FeatureVector(out))
}

/// Per-dimension standardization frozen at fit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Zero marks a constant dimension, which maps to 0.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[FeatureVector]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(Error::LengthMismatch { left: d, right: r.len() });
            }
            for (m, v) in mean.iter_mut().zip(&r.0) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(&r.0).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + m.abs()) {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}
