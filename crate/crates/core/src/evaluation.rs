// SPDX-License-Identifier: MIT OR Apache-2.0

//! Train-sampler × eval-sampler RMSE matrix and min-of-max selection.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{split_chronological, window_at, IndexRange, TimeSeriesDataset, WindowSpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::{extract_features, fit_features, FeatureVector, ModelSpec, WindowShape};
use crate::sampling::{draw_with, SamplerSpec};
use crate::seed::derive_seed;
use crate::weights::{compute_weights, WeightFunctionSpec, WeightSeries};

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sse: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Mean and spread of one matrix cell over replicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one replicate.
    pub std: f64,
    pub n: usize,
}

impl Cell {
    pub fn from_replicates(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    train_labels: Vec<String>,
    eval_labels: Vec<String>,
    /// Row-major, one row per train label.
    cells: Vec<Cell>,
}

impl EvalMatrix {
    pub fn new(train_labels: Vec<String>, eval_labels: Vec<String>, cells: Vec<Cell>) -> Result<Self> {
        if train_labels.is_empty() || eval_labels.is_empty() {
            return Err(Error::MalformedMatrix("matrix has no rows or columns".into()));
        }
        if cells.len() != train_labels.len() * eval_labels.len() {
            return Err(Error::LengthMismatch {
                left: train_labels.len() * eval_labels.len(),
                right: cells.len(),
            });
        }
        let n = cells[0].n;
        for c in &cells {
            if !(c.mean.is_finite() && c.mean >= 0.0 && c.std.is_finite() && c.std >= 0.0) {
                return Err(Error::MalformedMatrix(format!("invalid cell {c:?}")));
            }
            if c.n == 0 || c.n != n {
                return Err(Error::MalformedMatrix("replicate counts differ between cells".into()));
            }
        }
        Ok(Self {
            train_labels,
            eval_labels,
            cells,
        })
    }

    pub fn train_labels(&self) -> &[String] {
        &self.train_labels
    }

    pub fn eval_labels(&self) -> &[String] {
        &self.eval_labels
    }

    fn train_pos(&self, label: &str) -> Result<usize> {
        self.train_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn row(&self, train_label: &str) -> Result<&[Cell]> {
        let r = self.train_pos(train_label)?;
        let w = self.eval_labels.len();
        Ok(&self.cells[r * w..(r + 1) * w])
    }

    pub fn cell(&self, train_label: &str, eval_label: &str) -> Result<Cell> {
        let c = self
            .eval_labels
            .iter()
            .position(|l| l == eval_label)
            .ok_or_else(|| Error::UnknownLabel(eval_label.to_string()))?;
        Ok(self.row(train_label)?[c])
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["train_label", "eval_label", "mean", "std", "n"])?;
        for (r, a) in self.train_labels.iter().enumerate() {
            for (c, b) in self.eval_labels.iter().enumerate() {
                let cell = self.cells[r * self.eval_labels.len() + c];
                w.write_record([
                    a.clone(),
                    b.clone(),
                    cell.mean.to_string(),
                    cell.std.to_string(),
                    cell.n.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    /// Parses the long `train_label,eval_label,mean,std,n` layout. Column
    /// order is free; every (train, eval) pair must appear exactly once.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (ca, cb, cm, cs, cn) = (col("train_label")?, col("eval_label")?, col("mean")?, col("std")?, col("n")?);

        let mut train_labels: Vec<String> = Vec::new();
        let mut eval_labels: Vec<String> = Vec::new();
        let mut entries: Vec<(usize, usize, Cell)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize, name: &str| -> Result<f64> {
                field(i).parse::<f64>().map_err(|_| {
                    Error::MalformedMatrix(format!("row {}: column `{name}` is not a number", line + 2))
                })
            };
            let intern = |labels: &mut Vec<String>, s: &str| match labels.iter().position(|l| l == s) {
                Some(p) => p,
                None => {
                    labels.push(s.to_string());
                    labels.len() - 1
                }
            };
            let a = intern(&mut train_labels, field(ca));
            let b = intern(&mut eval_labels, field(cb));
            let n = field(cn).parse::<usize>().map_err(|_| {
                Error::MalformedMatrix(format!("row {}: column `n` is not a count", line + 2))
            })?;
            entries.push((
                a,
                b,
                Cell {
                    mean: num(cm, "mean")?,
                    std: num(cs, "std")?,
                    n,
                },
            ));
        }
        let w = eval_labels.len();
        let mut cells: Vec<Option<Cell>> = vec![None; train_labels.len() * w];
        for (a, b, cell) in entries {
            if cells[a * w + b].replace(cell).is_some() {
                return Err(Error::MalformedMatrix(format!(
                    "duplicate cell ({}, {})",
                    train_labels[a], eval_labels[b]
                )));
            }
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| Error::MissingCell {
                    train: train_labels[i / w].clone(),
                    eval: eval_labels[i % w].clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(train_labels, eval_labels, cells)
    }

    /// Aligned text table: rows are training samplers, columns evaluation
    /// samplers, cells `mean ± std`.
    pub fn render_table(&self) -> String {
        let head = "Trained on \\ Evaluated on";
        let first_w = self
            .train_labels
            .iter()
            .map(String::len)
            .chain([head.len()])
            .max()
            .unwrap_or(0);
        let texts: Vec<String> = self
            .cells
            .iter()
            .map(|c| format!("{:.3} ± {:.3}", c.mean, c.std))
            .collect();
        let col_w: Vec<usize> = (0..self.eval_labels.len())
            .map(|c| {
                (0..self.train_labels.len())
                    .map(|r| texts[r * self.eval_labels.len() + c].chars().count())
                    .chain([self.eval_labels[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{head:<first_w$}");
        for (label, w) in self.eval_labels.iter().zip(&col_w) {
            let _ = write!(out, " | {label:<w$}");
        }
        out.push('\n');
        let total = first_w + col_w.iter().map(|w| w + 3).sum::<usize>();
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for (r, label) in self.train_labels.iter().enumerate() {
            let _ = write!(out, "{label:<first_w$}");
            for (c, w) in col_w.iter().enumerate() {
                let text = &texts[r * self.eval_labels.len() + c];
                let pad = w - text.chars().count();
                let _ = write!(out, " | {text}{}", " ".repeat(pad));
            }
            out.push('\n');
        }
        out
    }
}

/// Largest mean RMSE in a row and the eval label where it occurs. The first
/// label wins ties.
pub fn max_error_row(matrix: &EvalMatrix, train_label: &str) -> Result<(f64, String)> {
    let row = matrix.row(train_label)?;
    let mut best = 0;
    for (i, c) in row.iter().enumerate() {
        if c.mean > row[best].mean {
            best = i;
        }
    }
    Ok((row[best].mean, matrix.eval_labels[best].clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSummary {
    pub train_label: String,
    pub max_error: f64,
    pub max_error_std: f64,
    pub measured_on: String,
    pub row_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: String,
    /// Train labels, ascending by worst-case error.
    pub ranking: Vec<String>,
    /// Per-row summaries in ranking order.
    pub rows: Vec<RowSummary>,
}

/// Picks the training sampler whose worst evaluation error is smallest.
///
/// Ties are broken by the smaller row mean, then by label order.
pub fn select_sampler(matrix: &EvalMatrix) -> Result<SelectionResult> {
    let mut rows: Vec<(usize, RowSummary)> = matrix
        .train_labels
        .iter()
        .enumerate()
        .map(|(pos, label)| {
            let (max_error, measured_on) = max_error_row(matrix, label)?;
            let row = matrix.row(label)?;
            let row_mean = row.iter().map(|c| c.mean).sum::<f64>() / row.len() as f64;
            let max_error_std = matrix.cell(label, &measured_on)?.std;
            Ok((
                pos,
                RowSummary {
                    train_label: label.clone(),
                    max_error,
                    max_error_std,
                    measured_on,
                    row_mean,
                },
            ))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|(pa, a), (pb, b)| {
        a.max_error
            .partial_cmp(&b.max_error)
            .unwrap_or(Ordering::Equal)
            .then(a.row_mean.partial_cmp(&b.row_mean).unwrap_or(Ordering::Equal))
            .then(pa.cmp(pb))
    });
    let rows: Vec<RowSummary> = rows.into_iter().map(|(_, r)| r).collect();
    Ok(SelectionResult {
        selected: rows[0].train_label.clone(),
        ranking: rows.iter().map(|r| r.train_label.clone()).collect(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalConfig {
    pub n_train: usize,
    pub n_eval: usize,
    pub n_replicates: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub execution: Execution,
    /// Keep every (truth, prediction, weight) triple.
    pub record_triples: bool,
}

impl Default for CrossEvalConfig {
    fn default() -> Self {
        Self {
            n_train: 10_000,
            n_eval: 2_000,
            n_replicates: 10,
            train_fraction: 0.7,
            seed: 0,
            execution: Execution::default(),
            record_triples: false,
        }
    }
}

/// Indices one eval sampler drew for one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    pub sampler: String,
    pub replicate: usize,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub train_label: String,
    pub eval_label: String,
    pub replicate: usize,
    pub index: usize,
    pub truth: f64,
    pub prediction: f64,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct CrossEvaluation {
    pub matrix: EvalMatrix,
    pub eval_sets: Vec<EvalSet>,
    pub triples: Vec<Triple>,
    pub train_range: IndexRange,
    pub eval_range: IndexRange,
}

/// Sampler list with `None` first and duplicate labels removed.
pub fn with_baseline(samplers: &[SamplerSpec]) -> Vec<SamplerSpec> {
    let mut out = vec![SamplerSpec::None];
    for s in samplers {
        if !out.iter().any(|o| o.label() == s.label()) {
            out.push(*s);
        }
    }
    out
}

pub fn train_seed(master: u64, label: &str, replicate: usize) -> u64 {
    derive_seed(master, &[label.into(), replicate.into(), "train".into()])
}

pub fn eval_seed(master: u64, label: &str, replicate: usize) -> u64 {
    derive_seed(master, &[label.into(), replicate.into(), "eval".into()])
}

struct PreparedEval {
    indices: Vec<usize>,
    features: Vec<FeatureVector>,
    truths: Vec<f64>,
    weights: Vec<f64>,
}

fn features_and_targets(
    dataset: &TimeSeriesDataset,
    window: &WindowSpec,
    indices: &[usize],
) -> Result<(Vec<FeatureVector>, Vec<f64>)> {
    let mut features = Vec::with_capacity(indices.len());
    let mut targets = Vec::with_capacity(indices.len());
    for &t in indices {
        let (w, y) = window_at(dataset, window, t)?;
        features.push(extract_features(&w)?);
        targets.push(y);
    }
    Ok((features, targets))
}

/// Builds the full train-sampler × eval-sampler RMSE matrix.
///
/// For replicate `r`, every eval sampler `b` draws one evaluation set from
/// the eval pool with a seed derived from `(seed, b, r, "eval")`; every
/// model trained in replicate `r` is scored on those same sets. Training
/// samples for `(a, r)` use a seed derived from `(seed, a, r, "train")`.
pub fn cross_evaluate(
    dataset: &TimeSeriesDataset,
    window: &WindowSpec,
    weight_spec: &WeightFunctionSpec,
    samplers: &[SamplerSpec],
    model: &ModelSpec,
    config: &CrossEvalConfig,
) -> Result<CrossEvaluation> {
    weight_spec.check_against(window)?;
    model.validate()?;
    if config.n_train == 0 || config.n_eval == 0 {
        return Err(Error::config("n_train", "sample sizes must be >= 1"));
    }
    if config.n_replicates == 0 {
        return Err(Error::config("n_replicates", "must be >= 1"));
    }
    let samplers = with_baseline(samplers);
    for s in &samplers {
        s.validate()?;
    }
    let labels: Vec<String> = samplers.iter().map(SamplerSpec::label).collect();
    let (train_range, eval_range) = split_chronological(dataset, window, config.train_fraction)?;
    for (pool, range, requested) in [
        ("train", train_range, config.n_train),
        ("eval", eval_range, config.n_eval),
    ] {
        if range.len() < requested {
            return Err(Error::InsufficientPool {
                pool,
                available: range.len(),
                requested,
            });
        }
    }
    let train_weights = compute_weights(dataset, window, weight_spec, train_range)?;
    let eval_weights = compute_weights(dataset, window, weight_spec, eval_range)?;
    let target_channel = dataset.channel_index(&window.target_channel)?;
    let shape = WindowShape {
        rows: window.length,
        cols: dataset.n_channels(),
    };
    let exec = config.execution;
    let n_s = samplers.len();
    let n_r = config.n_replicates;

    // Eval sets, indexed [r * n_s + b].
    let prepared: Vec<PreparedEval> = exec
        .map_range(n_r * n_s, |job| {
            let (r, b) = (job / n_s, job % n_s);
            let seed = eval_seed(config.seed, &labels[b], r);
            let sample = draw_with(&samplers[b], &eval_weights, config.n_eval, seed, Execution::Serial)?;
            let (features, truths) = features_and_targets(dataset, window, &sample.indices)?;
            let weights = weights_of(&eval_weights, &sample.indices);
            Ok(PreparedEval {
                indices: sample.indices,
                features,
                truths,
                weights,
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;

    // Train jobs, indexed [r * n_s + a]; each yields one RMSE per eval sampler.
    let scored: Vec<(Vec<f64>, Vec<Triple>)> = exec
        .map_range(n_r * n_s, |job| {
            let (r, a) = (job / n_s, job % n_s);
            let seed = train_seed(config.seed, &labels[a], r);
            let sample = draw_with(&samplers[a], &train_weights, config.n_train, seed, Execution::Serial)?;
            let (features, targets) = features_and_targets(dataset, window, &sample.indices)?;
            let spec = model.with_seed(derive_seed(seed, &["model".into()]));
            let trained = fit_features(&spec, &features, &targets, shape, target_channel)?;
            let mut scores = Vec::with_capacity(n_s);
            let mut triples = Vec::new();
            for (b, label_b) in labels.iter().enumerate() {
                let set = &prepared[r * n_s + b];
                let preds = set
                    .features
                    .iter()
                    .map(|f| trained.predict_features(f))
                    .collect::<Result<Vec<_>>>()?;
                scores.push(rmse(&preds, &set.truths)?);
                if config.record_triples {
                    for (i, &t) in set.indices.iter().enumerate() {
                        triples.push(Triple {
                            train_label: labels[a].clone(),
                            eval_label: label_b.clone(),
                            replicate: r,
                            index: t,
                            truth: set.truths[i],
                            prediction: preds[i],
                            weight: set.weights[i],
                        });
                    }
                }
            }
            Ok((scores, triples))
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(n_s * n_s);
    for a in 0..n_s {
        for b in 0..n_s {
            let per_rep: Vec<f64> = (0..n_r).map(|r| scored[r * n_s + a].0[b]).collect();
            cells.push(Cell::from_replicates(&per_rep));
        }
    }
    let matrix = EvalMatrix::new(labels.clone(), labels.clone(), cells)?;

    let eval_sets = prepared
        .iter()
        .enumerate()
        .map(|(job, p)| EvalSet {
            sampler: labels[job % n_s].clone(),
            replicate: job / n_s,
            indices: p.indices.clone(),
        })
        .collect();
    // Triples ordered by train label, then replicate.
    let mut triples = Vec::new();
    if config.record_triples {
        let mut order: Vec<usize> = (0..n_r * n_s).collect();
        order.sort_by_key(|&job| (job % n_s, job / n_s));
        let mut scored = scored;
        for job in order {
            triples.append(&mut scored[job].1);
        }
    }
    Ok(CrossEvaluation {
        matrix,
        eval_sets,
        triples,
        train_range,
        eval_range,
    })
}

fn weights_of(series: &WeightSeries, indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&i| series.get(i).unwrap_or(f64::NAN)).collect()
}

pub fn write_triples_csv<W: Write>(triples: &[Triple], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in triples {
        w.serialize(t)?;
    }
    if triples.is_empty() {
        w.write_record(["train_label", "eval_label", "replicate", "index", "truth", "prediction", "weight"])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_triples_csv<R: Read>(reader: R) -> Result<Vec<Triple>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_eval_sets_csv<W: Write>(sets: &[EvalSet], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sampler", "replicate", "index"])?;
    for s in sets {
        for i in &s.indices {
            w.write_record([s.sampler.clone(), s.replicate.to_string(), i.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Inverse of [`write_eval_sets_csv`]; rows of one set must be contiguous.
pub fn read_eval_sets_csv<R: Read>(reader: R) -> Result<Vec<EvalSet>> {
    #[derive(Deserialize)]
    struct Row {
        sampler: String,
        replicate: usize,
        index: usize,
    }
    let mut sets: Vec<EvalSet> = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: Row = row?;
        match sets.last_mut() {
            Some(last) if last.sampler == row.sampler && last.replicate == row.replicate => last.indices.push(row.index),
            _ => sets.push(EvalSet {
                sampler: row.sampler,
                replicate: row.replicate,
                indices: vec![row.index],
            }),
        }
    }
    Ok(sets)
}
