// SPDX-License-Identifier: MIT OR Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imbts::dataset::valid_indices;
use imbts::sampling::draw_with;
use imbts::{
    compute_weights, cross_evaluate, generate_synthetic, CrossEvalConfig, Execution, ModelSpec, SamplerSpec,
    SyntheticConfig, WeightFunctionSpec, WindowSpec,
};

const MODES: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn bench_draw(c: &mut Criterion) {
    let ds = generate_synthetic(&SyntheticConfig::default()).unwrap();
    let window = WindowSpec::new(30, 30, "temp").unwrap();
    let range = valid_indices(&ds, &window).unwrap();
    let weights = compute_weights(&ds, &window, &WeightFunctionSpec::TargetVariation { delta_steps: 30 }, range).unwrap();

    let mut group = c.benchmark_group("draw");
    for sampler in ["SUS-3", "IHS"] {
        let spec: SamplerSpec = sampler.parse().unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(sampler, name), &exec, |b, &exec| {
                b.iter(|| draw_with(&spec, &weights, 10_000, 11, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_cross_evaluate(c: &mut Criterion) {
    let ds = generate_synthetic(&SyntheticConfig {
        length: 50_000,
        ..Default::default()
    })
    .unwrap();
    let window = WindowSpec::new(30, 30, "temp").unwrap();
    let weight = WeightFunctionSpec::TargetVariation { delta_steps: 30 };
    let samplers: Vec<SamplerSpec> = ["SUS-1", "SUS-3", "IHS"].iter().map(|s| s.parse().unwrap()).collect();
    let models = [
        ("ridge", ModelSpec::Ridge { lambda: 1.0 }),
        (
            "mlp",
            ModelSpec::Mlp {
                hidden_units: 8,
                epochs: 2,
                learning_rate: 0.01,
                seed: 0,
            },
        ),
    ];

    let mut group = c.benchmark_group("cross_evaluate");
    group.sample_size(10);
    for (model_name, model) in &models {
        for (name, exec) in MODES {
            let config = CrossEvalConfig {
                n_train: 2_000,
                n_eval: 1_000,
                n_replicates: 4,
                execution: exec,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(*model_name, name), &config, |b, config| {
                b.iter(|| cross_evaluate(&ds, &window, &weight, &samplers, model, config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_draw, bench_cross_evaluate);
criterion_main!(benches);
