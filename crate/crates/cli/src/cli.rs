// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use imbts::Execution;

use crate::commands::{cmd_evaluate, cmd_fit, cmd_sample, cmd_select, cmd_synth, cmd_weights};
use crate::config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "imbts", version, about = "Weight-based sampling and cross-evaluation for imbalanced time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline config (TOML); defaults apply when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory [config: output_dir, env: IMBTS_OUT_DIR].
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_eval: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated sampler labels, e.g. "SUS-1,SUS-3,IHS".
    #[arg(long, value_delimiter = ',')]
    pub samplers: Option<Vec<String>>,
    /// Run on one thread.
    #[arg(long)]
    pub serial: bool,
}

impl Common {
    pub fn resolve(&self) -> anyhow::Result<(PipelineConfig, PathBuf)> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.n_train {
            config.n_train = n;
        }
        if let Some(n) = self.n_eval {
            config.n_eval = n;
        }
        if let Some(n) = self.replicates {
            config.n_replicates = n;
        }
        if let Some(s) = &self.samplers {
            config.samplers = s.clone();
        }
        if self.serial {
            config.execution = Execution::Serial;
        }
        config.validate().context("after command-line overrides")?;
        let out = config.resolve_output_dir(self.out_dir.as_deref());
        Ok((config, out))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic dataset described by [data.synthetic].
    Synth(Common),
    /// Compute weights over the training pool.
    Weights(Common),
    /// Draw one sample from the training pool and report densities.
    Sample {
        /// Sampler label: None, TUS-<tau>, SUS-<factor>, IHS or IHS-<bin width>.
        sampler: String,
        /// Sample size; defaults to n_train.
        #[arg(short, long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Build the train-sampler by eval-sampler RMSE matrix.
    Evaluate(Common),
    /// Select a sampler from a matrix CSV.
    Select {
        matrix: PathBuf,
        /// Also write the result to this JSON file.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train one model on a sample and save it as JSON.
    Fit {
        sampler: String,
        #[command(flatten)]
        common: Common,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(common) => {
            let (config, out) = common.resolve()?;
            let r = cmd_synth(&config, &out)?;
            println!("wrote {}", r.path.display());
            println!("steps {}  channels {}  events {}", r.length, r.channels, r.events);
        }
        Command::Weights(common) => {
            let (config, out) = common.resolve()?;
            let r = cmd_weights(&config, &out)?;
            println!("wrote {}", r.path.display());
            println!("train pool [{}, {})", r.train_range.start, r.train_range.end);
            print!("{}", r.summary.render());
        }
        Command::Sample { sampler, n, common } => {
            let (config, out) = common.resolve()?;
            let r = cmd_sample(&config, &out, &sampler, n)?;
            println!("wrote {}", r.indices_path.display());
            println!("wrote {}", r.density_path.display());
            println!("{} drew {} indices", r.sampler, r.drawn);
            println!("density max/min before {:.3}  after {:.3}", r.flatness_before, r.flatness_after);
            print!("{}", r.chart);
        }
        Command::Evaluate(common) => {
            let (config, out) = common.resolve()?;
            let r = cmd_evaluate(&config, &out)?;
            println!("wrote {}", r.matrix_path.display());
            print!("{}", r.table);
            println!("selected {}  ranking {}", r.selection.selected, r.selection.ranking.join(", "));
        }
        Command::Select { matrix, out } => {
            let r = cmd_select(&matrix, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Fit { sampler, common } => {
            let (config, out) = common.resolve()?;
            let r = cmd_fit(&config, &out, &sampler)?;
            println!("wrote {}", r.model_path.display());
            println!("{} on {} samples, train RMSE {:.4}", r.sampler, r.n_train, r.train_rmse);
        }
    }
    Ok(())
}

