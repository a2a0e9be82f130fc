// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo checks of the samplers against exact inclusion oracles.

use imbts::histogram::Binning;
use imbts::sampling::{draw, SamplerSpec};
use imbts::weights::WeightSeries;
use proptest::prelude::*;

fn series(weights: Vec<f64>) -> WeightSeries {
    WeightSeries::new((0..weights.len()).collect(), weights).unwrap()
}

/// Inclusion probabilities of an `n`-of-`N` exponential-key draw in the
/// large-population limit: index `i` is kept iff its `Exp(q_i)` variate is
/// below the threshold `c` solving `Σ 1 - exp(-q_i c) = n`.
fn exponential_key_inclusion(q: &[f64], n: usize) -> Vec<f64> {
    let expected = |c: f64| q.iter().map(|w| 1.0 - (-w * c).exp()).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0);
    while expected(hi) < n as f64 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    q.iter().map(|w| 1.0 - (-w * hi).exp()).collect()
}

fn two_level_weights() -> Vec<f64> {
    (0..100_000).map(|i| if i % 10 == 0 { 0.9 } else { 0.1 }).collect()
}

fn high_low_frequency(weights: &[f64], n: usize, seeds: u64) -> (f64, f64) {
    let ws = series(weights.to_vec());
    let (mut high, mut low) = (0usize, 0usize);
    for seed in 0..seeds {
        let s = draw(&SamplerSpec::Sus { factor: 1.0 }, &ws, n, seed).unwrap();
        for &i in &s.indices {
            if weights[i] > 0.5 {
                high += 1;
            } else {
                low += 1;
            }
        }
    }
    let n_high = weights.iter().filter(|&&w| w > 0.5).count() as f64;
    let n_low = weights.len() as f64 - n_high;
    (high as f64 / (n_high * seeds as f64), low as f64 / (n_low * seeds as f64))
}

#[test]
fn sus_inclusion_ratio_matches_exponential_key_oracle() {
    let weights = two_level_weights();
    let n = 10_000;
    let (high, low) = high_low_frequency(&weights, n, 20);
    let empirical = high / low;

    // After max-normalization the relative weights are 1 and 1/9.
    let q: Vec<f64> = weights.iter().map(|w| w / 0.9).collect();
    let pi = exponential_key_inclusion(&q, n);
    let exact = pi[0] / pi[1];
    assert!((exact - 7.05).abs() < 0.01, "oracle ratio {exact}");
    assert!(
        (empirical - exact).abs() / exact < 0.10,
        "empirical {empirical} vs exact {exact}"
    );
}

#[test]
fn sus_ratio_approaches_weight_ratio_for_small_samples() {
    let weights = two_level_weights();
    let (high, low) = high_low_frequency(&weights, 500, 20);
    let empirical = high / low;
    assert!((empirical - 9.0).abs() / 9.0 < 0.10, "empirical {empirical}");
}

#[test]
fn tus_is_uniform_over_the_kept_set() {
    // 200 indices above tau, 100 below.
    let weights: Vec<f64> = (0..300).map(|i| if i % 3 == 0 { 0.5 } else { 3.0 }).collect();
    let ws = series(weights.clone());
    let kept: Vec<usize> = (0..300).filter(|i| i % 3 != 0).collect();
    let (n, rounds) = (50, 400u64);
    let mut counts = vec![0usize; 300];
    for seed in 0..rounds {
        for i in draw(&SamplerSpec::Tus { tau: 2.0 }, &ws, n, seed).unwrap().indices {
            counts[i] += 1;
        }
    }
    assert!((0..300).filter(|i| i % 3 == 0).all(|i| counts[i] == 0));
    let expected = (n as u64 * rounds) as f64 / kept.len() as f64;
    let chi2: f64 = kept
        .iter()
        .map(|&i| (counts[i] as f64 - expected).powi(2) / expected)
        .sum();
    // Wilson–Hilferty 99.9% point for 199 degrees of freedom.
    let df = (kept.len() - 1) as f64;
    let z = 3.090;
    let critical = df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3);
    assert!(chi2 < critical, "chi2 {chi2} vs {critical}");

    let all = draw(&SamplerSpec::Tus { tau: 2.0 }, &ws, 1_000, 0).unwrap();
    assert_eq!(all.indices, kept);
}

#[test]
fn sus_inclusion_is_monotone_in_weight() {
    let weights: Vec<f64> = (1..=20).flat_map(|w| std::iter::repeat_n(w as f64, 50)).collect();
    let ws = series(weights.clone());
    let rounds = 300;
    let mut freq = [0.0; 20];
    for seed in 0..rounds {
        for i in draw(&SamplerSpec::Sus { factor: 1.0 }, &ws, 200, seed).unwrap().indices {
            freq[weights[i] as usize - 1] += 1.0;
        }
    }
    let trials = (50 * rounds) as f64;
    let p: Vec<f64> = freq.iter().map(|f| f / trials).collect();
    for pair in p.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let se = ((lo * (1.0 - lo) + hi * (1.0 - hi)) / trials).sqrt();
        assert!(hi - lo > -1.645 * se, "p = {p:?}");
    }
}

#[test]
fn larger_factor_favours_the_top_decile() {
    // Exponential-like skew: most weights small, a long right tail.
    let weights: Vec<f64> = (0..20_000)
        .map(|i| {
            let u = (i as f64 + 0.5) / 20_000.0;
            -(1.0 - u).ln() * if i % 50 == 0 { 5.0 } else { 0.5 }
        })
        .collect();
    let mut sorted = weights.clone();
    sorted.sort_by(f64::total_cmp);
    let p90 = sorted[(0.9 * (sorted.len() - 1) as f64) as usize];
    let ws = series(weights.clone());
    let top_share = |factor: f64| {
        (0..20u64)
            .map(|seed| {
                let s = draw(&SamplerSpec::Sus { factor }, &ws, 2_000, seed).unwrap();
                s.indices.iter().filter(|&&i| weights[i] > p90).count() as f64 / s.len() as f64
            })
            .sum::<f64>()
            / 20.0
    };
    let (f1, f3) = (top_share(1.0), top_share(3.0));
    assert!(f3 > f1 && f1 > 0.1, "f1 {f1}, f3 {f3}");
}

#[test]
fn ihs_flattens_well_populated_bins() {
    // Four unit-width bins with 50k, 20k, 10k and 5k members.
    let mut weights = Vec::new();
    for (bin, count) in [50_000usize, 20_000, 10_000, 5_000].into_iter().enumerate() {
        weights.extend((0..count).map(|i| bin as f64 + 0.1 + 0.8 * (i as f64 / count as f64)));
    }
    weights.push(4.0);
    let ws = series(weights.clone());
    let sampler = SamplerSpec::Ihs { binning: Binning::FixedWidth(1.0) };
    let mut per_bin = [0.0f64; 4];
    let seeds = 20;
    for seed in 0..seeds {
        for i in draw(&sampler, &ws, 1_000, seed).unwrap().indices {
            let b = (weights[i] as usize).min(3);
            per_bin[b] += 1.0;
        }
    }
    // Exact oracle: every bin carries relative mass count · (1/count) = 1.
    let expected = per_bin.iter().sum::<f64>() / 4.0;
    for count in per_bin {
        assert!((count - expected).abs() / expected < 0.15, "{per_bin:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn draws_are_sorted_distinct_and_sized(
        weights in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], 1..200),
        n in 1usize..250,
        seed in any::<u64>(),
        which in 0usize..4,
    ) {
        let sampler = [
            SamplerSpec::None,
            SamplerSpec::Tus { tau: 1.0 },
            SamplerSpec::Sus { factor: 2.0 },
            SamplerSpec::Ihs { binning: Binning::Auto },
        ][which];
        let ws = series(weights.clone());
        let eligible = match sampler {
            SamplerSpec::None | SamplerSpec::Ihs { .. } => weights.len(),
            SamplerSpec::Tus { tau } => weights.iter().filter(|&&w| w > tau).count(),
            SamplerSpec::Sus { .. } => weights.iter().filter(|&&w| w > 0.0).count(),
        };
        match draw(&sampler, &ws, n, seed) {
            Ok(s) => {
                prop_assert_eq!(s.len(), n.min(eligible));
                prop_assert!(s.indices.windows(2).all(|p| p[0] < p[1]));
                if matches!(sampler, SamplerSpec::Sus { .. } | SamplerSpec::Tus { .. }) {
                    prop_assert!(s.indices.iter().all(|&i| weights[i] > 0.0));
                }
                prop_assert_eq!(draw(&sampler, &ws, n, seed).unwrap(), s);
            }
            Err(imbts::Error::AllWeightsZero) => prop_assert_eq!(eligible, 0),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
