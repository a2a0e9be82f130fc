// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pipeline configuration, read from a single TOML file.
//!
//! ```toml
//! seed = 3
//! n_train = 10000
//! samplers = ["SUS-1", "SUS-3", "IHS"]
//!
//! [data.synthetic]
//! length = 100000
//!
//! [window]
//! length = 30
//! horizon = 30
//!
//! [model]
//! kind = "ridge"
//! lambda = 1.0
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use imbts::dataset::SYNTHETIC_TARGET;
use imbts::{
    generate_synthetic, load_csv, CrossEvalConfig, Execution, ModelSpec, SamplerSpec, SyntheticConfig,
    TimeSeriesDataset, WeightFunctionSpec, WindowSpec,
};
use serde::{Deserialize, Serialize};

/// Environment variable naming the output directory when neither the
/// config nor the command line does.
pub const OUT_DIR_ENV: &str = "IMBTS_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "imbts-out";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    pub target: String,
    pub interval_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv(CsvSource),
    Synthetic(SyntheticConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticConfig::default())
    }
}

impl DataSource {
    pub fn target(&self) -> &str {
        match self {
            DataSource::Csv(c) => &c.target,
            DataSource::Synthetic(_) => SYNTHETIC_TARGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub length: usize,
    pub horizon: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { length: 30, horizon: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub n_train: usize,
    pub n_eval: usize,
    pub train_fraction: f64,
    pub n_replicates: usize,
    pub execution: Execution,
    pub data: DataSource,
    pub window: WindowConfig,
    /// Defaults to the target variation over the window horizon.
    pub weight: Option<WeightFunctionSpec>,
    /// Sampler labels; `None` is always added as the baseline.
    pub samplers: Vec<String>,
    pub model: ModelSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let eval = CrossEvalConfig::default();
        Self {
            output_dir: None,
            seed: eval.seed,
            n_train: eval.n_train,
            n_eval: eval.n_eval,
            train_fraction: eval.train_fraction,
            n_replicates: eval.n_replicates,
            execution: eval.execution,
            data: DataSource::default(),
            window: WindowConfig::default(),
            weight: None,
            samplers: vec!["SUS-1".into(), "SUS-3".into(), "IHS".into()],
            model: ModelSpec::Ridge { lambda: 1.0 },
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text).context("invalid config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks everything that does not need the data itself.
    pub fn validate(&self) -> anyhow::Result<()> {
        let window = self.window_spec()?;
        if let DataSource::Synthetic(s) = &self.data {
            s.validate_for(&window).context("data.synthetic")?;
        }
        self.weight_spec().check_against(&window).context("weight")?;
        self.sampler_specs()?;
        self.model.validate().context("model")?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction: must lie strictly between 0 and 1, got {}", self.train_fraction);
        }
        for (field, v) in [("n_train", self.n_train), ("n_eval", self.n_eval), ("n_replicates", self.n_replicates)] {
            if v == 0 {
                bail!("{field}: must be >= 1");
            }
        }
        Ok(())
    }

    pub fn window_spec(&self) -> anyhow::Result<WindowSpec> {
        WindowSpec::new(self.window.length, self.window.horizon, self.data.target()).context("window")
    }

    pub fn weight_spec(&self) -> WeightFunctionSpec {
        self.weight.clone().unwrap_or(WeightFunctionSpec::TargetVariation {
            delta_steps: self.window.horizon,
        })
    }

    pub fn sampler_specs(&self) -> anyhow::Result<Vec<SamplerSpec>> {
        self.samplers
            .iter()
            .map(|label| label.parse::<SamplerSpec>().context("samplers"))
            .collect()
    }

    pub fn cross_eval_config(&self) -> CrossEvalConfig {
        CrossEvalConfig {
            n_train: self.n_train,
            n_eval: self.n_eval,
            n_replicates: self.n_replicates,
            train_fraction: self.train_fraction,
            seed: self.seed,
            execution: self.execution,
            record_triples: true,
        }
    }

    /// Command line, then config, then environment, then the default.
    pub fn resolve_output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn load_dataset(&self) -> anyhow::Result<TimeSeriesDataset> {
        match &self.data {
            DataSource::Synthetic(s) => Ok(generate_synthetic(s).context("data.synthetic")?),
            DataSource::Csv(c) => {
                let loaded = load_csv(&c.path, &c.target, c.interval_seconds).context("data.csv")?;
                if loaded.dropped_rows > 0 {
                    eprintln!("dropped {} rows with missing or non-numeric values", loaded.dropped_rows);
                }
                Ok(loaded.dataset)
            }
        }
    }
}
