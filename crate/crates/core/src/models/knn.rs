// SPDX-License-Identifier: MIT OR Apache-2.0

/// Mean target of the `k` nearest rows by Euclidean distance. Ties keep
/// the earlier training row.
pub fn predict(features: &[Vec<f64>], targets: &[f64], k: usize, query: &[f64]) -> f64 {
    let mut dist: Vec<(f64, usize)> = features
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            (d, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.iter().map(|&(_, i)| targets[i]).sum::<f64>() / k as f64
}
