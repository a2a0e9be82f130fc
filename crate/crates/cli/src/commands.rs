// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use imbts::dataset::{generate_synthetic_with_events, split_chronological, window_at, IndexRange};
use imbts::evaluation::{train_seed, write_eval_sets_csv, write_triples_csv};
use imbts::histogram::quantile_sorted;
use imbts::sampling::draw_with;
use imbts::seed::derive_seed;
use imbts::{
    compute_weights, cross_evaluate, density_report, fit, rmse, select_sampler, Binning, EvalMatrix, Execution,
    SamplerSpec, SelectionResult, TimeSeriesDataset, WeightSeries,
};
use serde::Serialize;

use crate::config::{DataSource, PipelineConfig};

const CHART_WIDTH: usize = 30;

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn create_file(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Sampler labels may contain '.', which is fine in file names.
fn file_label(label: &str) -> String {
    label.replace(['/', '\\'], "_")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthReport {
    pub path: PathBuf,
    pub length: usize,
    pub channels: usize,
    pub events: usize,
}

pub fn cmd_synth(config: &PipelineConfig, out_dir: &Path) -> anyhow::Result<SynthReport> {
    let DataSource::Synthetic(synthetic) = &config.data else {
        bail!("data: synth needs a [data.synthetic] source");
    };
    let series = generate_synthetic_with_events(synthetic).context("data.synthetic")?;
    create_dir(out_dir)?;
    let path = out_dir.join("synthetic.csv");
    series.dataset.write_csv(&path)?;
    Ok(SynthReport {
        path,
        length: series.dataset.len(),
        channels: series.dataset.n_channels(),
        events: series.event_starts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

impl WeightSummary {
    pub fn of(series: &WeightSeries) -> Self {
        let mut sorted = series.weights().to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&sorted, p);
        Self {
            count: sorted.len(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            min: sorted[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            q90: q(0.9),
            q99: q(0.99),
            max: sorted[sorted.len() - 1],
        }
    }

    pub fn render(&self) -> String {
        format!(
            "count {}\nmean {:.4}\nmin {:.4}\nq25 {:.4}\nmedian {:.4}\nq75 {:.4}\nq90 {:.4}\nq99 {:.4}\nmax {:.4}\n",
            self.count, self.mean, self.min, self.q25, self.median, self.q75, self.q90, self.q99, self.max
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightsReport {
    pub path: PathBuf,
    pub summary_path: PathBuf,
    pub train_range: IndexRange,
    pub summary: WeightSummary,
}

struct Pool {
    dataset: TimeSeriesDataset,
    train_range: IndexRange,
    weights: WeightSeries,
}

fn train_pool(config: &PipelineConfig) -> anyhow::Result<Pool> {
    let dataset = config.load_dataset()?;
    let window = config.window_spec()?;
    let (train_range, _) = split_chronological(&dataset, &window, config.train_fraction)?;
    let weights = compute_weights(&dataset, &window, &config.weight_spec(), train_range).context("weight")?;
    Ok(Pool {
        dataset,
        train_range,
        weights,
    })
}

/// Weights over the training pool.
pub fn cmd_weights(config: &PipelineConfig, out_dir: &Path) -> anyhow::Result<WeightsReport> {
    let pool = train_pool(config)?;
    create_dir(out_dir)?;
    let path = out_dir.join("weights.csv");
    pool.weights.write_csv(&path)?;
    let summary = WeightSummary::of(&pool.weights);
    let summary_path = out_dir.join("weights_summary.json");
    write_json(&summary_path, &summary)?;
    Ok(WeightsReport {
        path,
        summary_path,
        train_range: pool.train_range,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub sampler: String,
    pub drawn: usize,
    pub indices_path: PathBuf,
    pub provenance_path: PathBuf,
    pub density_path: PathBuf,
    pub chart_path: PathBuf,
    pub flatness_before: f64,
    pub flatness_after: f64,
    pub chart: String,
}

/// Draws `n` indices (default `n_train`) from the training pool with the
/// seed that replicate 0 of `evaluate` uses for this sampler.
pub fn cmd_sample(
    config: &PipelineConfig,
    out_dir: &Path,
    sampler_label: &str,
    n: Option<usize>,
) -> anyhow::Result<SampleReport> {
    let sampler: SamplerSpec = sampler_label.parse()?;
    let pool = train_pool(config)?;
    let label = sampler.label();
    let seed = train_seed(config.seed, &label, 0);
    let sample = draw_with(&sampler, &pool.weights, n.unwrap_or(config.n_train), seed, config.execution)?;
    let after = pool.weights.subset(&sample.indices)?;
    let binning = match sampler {
        SamplerSpec::Ihs { binning } => binning,
        _ => Binning::Auto,
    };
    let report = density_report(&pool.weights, &after, binning)?;

    create_dir(out_dir)?;
    let stem = format!("sample_{}", file_label(&label));
    let indices_path = out_dir.join(format!("{stem}_indices.csv"));
    let provenance_path = out_dir.join(format!("{stem}_provenance.json"));
    let density_path = out_dir.join(format!("{stem}_density.csv"));
    let chart_path = out_dir.join(format!("{stem}_density.txt"));
    sample.write_csv(&indices_path)?;
    sample.write_provenance_json(&provenance_path)?;
    report.write_csv(&density_path)?;
    let chart = report.render_ascii(CHART_WIDTH);
    write_text(&chart_path, &chart)?;
    Ok(SampleReport {
        sampler: label,
        drawn: sample.len(),
        indices_path,
        provenance_path,
        density_path,
        chart_path,
        flatness_before: report.flatness_before(),
        flatness_after: report.flatness_after(),
        chart,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluateReport {
    pub matrix_path: PathBuf,
    pub table_path: PathBuf,
    pub triples_path: PathBuf,
    pub eval_sets_path: PathBuf,
    pub selection_path: PathBuf,
    pub table: String,
    pub selection: SelectionResult,
}

pub fn cmd_evaluate(config: &PipelineConfig, out_dir: &Path) -> anyhow::Result<EvaluateReport> {
    let dataset = config.load_dataset()?;
    let window = config.window_spec()?;
    let samplers = config.sampler_specs()?;
    let result = cross_evaluate(
        &dataset,
        &window,
        &config.weight_spec(),
        &samplers,
        &config.model,
        &config.cross_eval_config(),
    )?;
    let selection = select_sampler(&result.matrix)?;
    let table = result.matrix.render_table();

    create_dir(out_dir)?;
    let matrix_path = out_dir.join("matrix.csv");
    let table_path = out_dir.join("matrix.txt");
    let triples_path = out_dir.join("triples.csv");
    let eval_sets_path = out_dir.join("eval_sets.csv");
    let selection_path = out_dir.join("selection.json");
    result.matrix.write_csv(&matrix_path)?;
    write_text(&table_path, &table)?;
    write_triples_csv(&result.triples, create_file(&triples_path)?)?;
    write_eval_sets_csv(&result.eval_sets, create_file(&eval_sets_path)?)?;
    write_json(&selection_path, &selection)?;
    Ok(EvaluateReport {
        matrix_path,
        table_path,
        triples_path,
        eval_sets_path,
        selection_path,
        table,
        selection,
    })
}

/// Applies the min-of-max rule to a matrix CSV, optionally saving the
/// result as JSON.
pub fn cmd_select(matrix_csv: &Path, out: Option<&Path>) -> anyhow::Result<SelectionResult> {
    let matrix = EvalMatrix::read_csv_path(matrix_csv)?;
    let selection = select_sampler(&matrix)?;
    if let Some(path) = out {
        write_json(path, &selection)?;
    }
    Ok(selection)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub model_path: PathBuf,
    pub sampler: String,
    pub n_train: usize,
    pub train_rmse: f64,
}

/// Trains the configured model exactly as replicate 0 of `evaluate` does
/// for `sampler_label` and saves it as JSON.
pub fn cmd_fit(config: &PipelineConfig, out_dir: &Path, sampler_label: &str) -> anyhow::Result<FitReport> {
    let sampler: SamplerSpec = sampler_label.parse()?;
    let pool = train_pool(config)?;
    let window = config.window_spec()?;
    if pool.train_range.len() < config.n_train {
        bail!(
            "n_train: train pool has {} indices, {} requested",
            pool.train_range.len(),
            config.n_train
        );
    }
    let label = sampler.label();
    let seed = train_seed(config.seed, &label, 0);
    let sample = draw_with(&sampler, &pool.weights, config.n_train, seed, Execution::Serial)?;
    let mut windows = Vec::with_capacity(sample.len());
    let mut targets = Vec::with_capacity(sample.len());
    for &t in &sample.indices {
        let (w, y) = window_at(&pool.dataset, &window, t)?;
        windows.push(w);
        targets.push(y);
    }
    let spec = config.model.with_seed(derive_seed(seed, &["model".into()]));
    let model = fit(&spec, &windows, &targets, pool.dataset.target_index())?;
    let preds = windows.iter().map(|w| model.predict(w)).collect::<Result<Vec<_>, _>>()?;

    create_dir(out_dir)?;
    let model_path = out_dir.join(format!("model_{}.json", file_label(&label)));
    model.save(&model_path)?;
    Ok(FitReport {
        model_path,
        sampler: label,
        n_train: sample.len(),
        train_rmse: rmse(&preds, &targets)?,
    })
}
