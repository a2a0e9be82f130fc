// SPDX-License-Identifier: MIT OR Apache-2.0
#![allow(dead_code, clippy::approx_constant)]

use imbts::SyntheticConfig;
use imbts_cli::config::DataSource;
use imbts_cli::PipelineConfig;

/// Reference TCN cross-evaluation matrix, (mean, std) per cell.
pub const TCN_LABELS: [&str; 4] = ["None", "SUS-1", "SUS-3", "IHS"];
pub const TCN_CELLS: [[(f64, f64); 4]; 4] = [
    [(0.871, 0.021), (1.684, 0.037), (3.060, 0.068), (3.142, 0.05)],
    [(1.007, 0.079), (1.462, 0.041), (2.686, 0.066), (2.703, 0.063)],
    [(3.41, 0.213), (2.4, 0.091), (1.592, 0.124), (2.283, 0.008)],
    [(2.579, 0.231), (2.016, 0.091), (1.845, 0.062), (2.145, 0.039)],
];

pub fn tcn_matrix_csv() -> String {
    let mut s = String::from("train_label,eval_label,mean,std,n\n");
    for (a, row) in TCN_LABELS.iter().zip(TCN_CELLS) {
        for (b, (mean, std)) in TCN_LABELS.iter().zip(row) {
            s.push_str(&format!("{a},{b},{mean},{std},10\n"));
        }
    }
    s
}

/// Small synthetic pipeline that runs in well under a second.
pub fn small_config(samplers: &[&str]) -> PipelineConfig {
    PipelineConfig {
        seed: 11,
        n_train: 1_000,
        n_eval: 500,
        n_replicates: 2,
        data: DataSource::Synthetic(SyntheticConfig {
            length: 20_000,
            ..Default::default()
        }),
        samplers: samplers.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    }
}
