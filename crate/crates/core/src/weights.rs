// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-index importance weights.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{valid_indices, IndexRange, TimeSeriesDataset, WindowSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowStat {
    Mean,
    Std,
    Max,
}

/// Weight function `w_t = f(x_t, y_t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFunctionSpec {
    /// `|y(t+Δ) - y(t)|`.
    TargetVariation { delta_steps: usize },
    /// `y(t+Δ)` with `Δ` the window horizon, shifted so the range minimum is 0.
    TargetLevel,
    /// Statistic of one channel over the input window. Shifted by the range
    /// minimum when that minimum is negative.
    ChannelWindowStat { channel: String, stat: WindowStat },
}

impl WeightFunctionSpec {
    /// Checks that a target-variation horizon matches the forecast horizon.
    pub fn check_against(&self, window: &WindowSpec) -> Result<()> {
        match self {
            WeightFunctionSpec::TargetVariation { delta_steps } if *delta_steps != window.horizon => {
                Err(Error::config(
                    "weight.delta_steps",
                    format!(
                        "{delta_steps} differs from the forecast horizon {}",
                        window.horizon
                    ),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Weights aligned with strictly increasing time indices.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSeries {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightSeries {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: indices.len(),
                right: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::NonFinite(w));
        }
        if indices.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::UnsortedIndices);
        }
        Ok(Self { indices, weights })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|pos| self.weights[pos])
    }

    /// Restriction to `indices`, which must all be present.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let weights = indices
            .iter()
            .map(|&i| self.get(i).ok_or(Error::MissingIndex(i)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices.to_vec(), weights)
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "weight"])?;
        for (i, wt) in self.iter() {
            w.write_record([i.to_string(), wt.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            index: usize,
            weight: f64,
        }
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: Row = row?;
            indices.push(row.index);
            weights.push(row.weight);
        }
        Self::new(indices, weights)
    }
}

/// Computes the weight of every index in `range`.
pub fn compute_weights(
    dataset: &TimeSeriesDataset,
    window: &WindowSpec,
    spec: &WeightFunctionSpec,
    range: IndexRange,
) -> Result<WeightSeries> {
    if range.is_empty() {
        return Err(Error::EmptyRange);
    }
    let valid = valid_indices(dataset, window)?;
    if !valid.contains_range(&range) {
        return Err(Error::IndexOutOfRange {
            index: if range.start < valid.start { range.start } else { range.end - 1 },
            start: valid.start,
            end: valid.end,
        });
    }
    let target = dataset.channel_index(&window.target_channel)?;
    let weights: Vec<f64> = match spec {
        WeightFunctionSpec::TargetVariation { delta_steps } => {
            let last = range.end - 1 + delta_steps;
            if last >= dataset.len() {
                return Err(Error::SeriesTooShort {
                    len: dataset.len(),
                    required: last + 1,
                });
            }
            range
                .iter()
                .map(|t| (dataset.value(t + delta_steps, target) - dataset.value(t, target)).abs())
                .collect()
        }
        WeightFunctionSpec::TargetLevel => {
            let levels: Vec<f64> = range
                .iter()
                .map(|t| dataset.value(t + window.horizon, target))
                .collect();
            shift_to_zero(levels, true)
        }
        WeightFunctionSpec::ChannelWindowStat { channel, stat } => {
            let c = dataset.channel_index(channel)?;
            let stats: Vec<f64> = range
                .iter()
                .map(|t| window_stat(dataset, c, t + 1 - window.length, t, *stat))
                .collect();
            shift_to_zero(stats, false)
        }
    };
    Ok(WeightSeries {
        indices: range.iter().collect(),
        weights,
    })
}

fn shift_to_zero(mut values: Vec<f64>, always: bool) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if always || min < 0.0 {
        for v in &mut values {
            *v = (*v - min).max(0.0);
        }
    }
    values
}

fn window_stat(ds: &TimeSeriesDataset, channel: usize, first: usize, last: usize, stat: WindowStat) -> f64 {
    let n = (last - first + 1) as f64;
    let column = (first..=last).map(|t| ds.value(t, channel));
    match stat {
        WindowStat::Mean => column.sum::<f64>() / n,
        WindowStat::Max => column.fold(f64::NEG_INFINITY, f64::max),
        WindowStat::Std => {
            let mean = column.clone().sum::<f64>() / n;
            (column.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
        }
    }
}
