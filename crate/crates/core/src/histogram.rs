// SPDX-License-Identifier: MIT OR Apache-2.0

//! Freedman–Diaconis binning, fixed-width histograms, and before/after
//! density comparisons on a shared partition.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightSeries;

const MAX_BINS: usize = 10_000_000;

/// Quantile of sorted data with linear interpolation at position `p·(n-1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Freedman–Diaconis bin width `2·IQR·n^(-1/3)`.
///
/// Falls back to Sturges (`range / (⌈log2 n⌉ + 1)`) when the IQR is zero,
/// and to 1 when the data has no spread at all.
pub fn fd_bin_width(values: &[f64]) -> Result<f64> {
    let sorted = sorted_finite(values)?;
    let n = sorted.len();
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr > 0.0 {
        return Ok(2.0 * iqr / (n as f64).cbrt());
    }
    let range = sorted[n - 1] - sorted[0];
    if range > 0.0 {
        let bins = (n as f64).log2().ceil() + 1.0;
        Ok(range / bins)
    } else {
        Ok(1.0)
    }
}

/// How bin widths are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Freedman–Diaconis width computed from the data.
    #[default]
    Auto,
    FixedWidth(f64),
}

impl Binning {
    pub fn width_for(&self, values: &[f64]) -> Result<f64> {
        match *self {
            Binning::Auto => fd_bin_width(values),
            Binning::FixedWidth(h) if h.is_finite() && h > 0.0 => Ok(h),
            Binning::FixedWidth(_) => Err(Error::config("binning.width", "must be positive")),
        }
    }

    pub fn histogram(&self, values: &[f64]) -> Result<Histogram> {
        Histogram::build(values, self.width_for(values)?)
    }
}

/// Equal-width histogram. Bins are `[e_i, e_{i+1})` except the last, which
/// is closed on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<usize>,
    n: usize,
    width: f64,
}

impl Histogram {
    pub fn build(values: &[f64], width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::config("width", "bin width must be positive and finite"));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
            min = min.min(v);
            max = max.max(v);
        }
        let raw_bins = ((max - min) / width).ceil();
        if raw_bins >= MAX_BINS as f64 {
            return Err(Error::TooManyBins(raw_bins.min(usize::MAX as f64) as usize));
        }
        let n_bins = (raw_bins as usize).max(1);
        let mut edges: Vec<f64> = (0..=n_bins).map(|i| min + i as f64 * width).collect();
        // min + n·width can round below max.
        edges[n_bins] = edges[n_bins].max(max);
        let mut hist = Self {
            edges,
            counts: vec![0; n_bins],
            n: values.len(),
            width,
        };
        for &v in values {
            let b = hist.bin_unchecked(v);
            hist.counts[b] += 1;
        }
        Ok(hist)
    }

    fn bin_unchecked(&self, v: f64) -> usize {
        let pos = ((v - self.edges[0]) / self.width).floor();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.counts.len() - 1)
        }
    }

    /// Bin index holding `v`.
    pub fn bin_of(&self, v: f64) -> Result<usize> {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        if !(v >= lo && v <= hi) {
            return Err(Error::OutOfSupport { value: v, lo, hi });
        }
        Ok(self.bin_unchecked(v))
    }

    /// Count of the bin holding `v`.
    pub fn lookup(&self, v: f64) -> Result<usize> {
        self.bin_of(v).map(|b| self.counts[b])
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Counts of `values` on this histogram's bins.
    pub fn count_on_edges(&self, values: &[f64]) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.n_bins()];
        for &v in values {
            counts[self.bin_of(v)?] += 1;
        }
        Ok(counts)
    }
}

/// Normalized densities of two weight series on identical bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub edges: Vec<f64>,
    pub density_before: Vec<f64>,
    pub density_after: Vec<f64>,
}

pub fn density_report(before: &WeightSeries, after: &WeightSeries, binning: Binning) -> Result<DensityReport> {
    if before.is_empty() || after.is_empty() {
        return Err(Error::EmptyInput);
    }
    let union: Vec<f64> = before.weights().iter().chain(after.weights()).copied().collect();
    let shared = binning.histogram(&union)?;
    let density = |values: &[f64]| -> Result<Vec<f64>> {
        let counts = shared.count_on_edges(values)?;
        let n = values.len() as f64;
        Ok(shared
            .edges
            .windows(2)
            .zip(counts)
            .map(|(e, c)| c as f64 / (n * (e[1] - e[0])))
            .collect())
    };
    Ok(DensityReport {
        density_before: density(before.weights())?,
        density_after: density(after.weights())?,
        edges: shared.edges,
    })
}

fn flatness(density: &[f64]) -> f64 {
    let positive = density.iter().copied().filter(|&d| d > 0.0);
    let (min, max) = positive.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if max > 0.0 {
        max / min
    } else {
        f64::NAN
    }
}

impl DensityReport {
    pub fn n_bins(&self) -> usize {
        self.density_before.len()
    }

    /// Max/min ratio over bins with positive density before sampling.
    pub fn flatness_before(&self) -> f64 {
        flatness(&self.density_before)
    }

    pub fn flatness_after(&self) -> f64 {
        flatness(&self.density_after)
    }

    pub fn integral(density: &[f64], edges: &[f64]) -> f64 {
        edges.windows(2).zip(density).map(|(e, d)| (e[1] - e[0]) * d).sum()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "density_before", "density_after"])?;
        for (i, e) in self.edges.windows(2).enumerate() {
            w.write_record([
                e[0].to_string(),
                e[1].to_string(),
                self.density_before[i].to_string(),
                self.density_after[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            bin_left: f64,
            bin_right: f64,
            density_before: f64,
            density_after: f64,
        }
        let mut report = DensityReport {
            edges: Vec::new(),
            density_before: Vec::new(),
            density_after: Vec::new(),
        };
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: Row = row?;
            if report.edges.is_empty() {
                report.edges.push(row.bin_left);
            }
            report.edges.push(row.bin_right);
            report.density_before.push(row.density_before);
            report.density_after.push(row.density_after);
        }
        if report.density_before.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(report)
    }

    /// Side-by-side horizontal bar chart, `bar_width` characters per side.
    pub fn render_ascii(&self, bar_width: usize) -> String {
        let peak = self
            .density_before
            .iter()
            .chain(&self.density_after)
            .copied()
            .fold(0.0f64, f64::max);
        let bar = |d: f64| {
            let len = if peak > 0.0 {
                ((d / peak) * bar_width as f64).round() as usize
            } else {
                0
            };
            format!("{:<width$}", "#".repeat(len), width = bar_width)
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>12} {:>12}  {:<bw$}  {:<bw$}",
            "bin_left",
            "bin_right",
            "before",
            "after",
            bw = bar_width
        );
        for (i, e) in self.edges.windows(2).enumerate() {
            let _ = writeln!(
                out,
                "{:>12.4} {:>12.4}  {}  {}",
                e[0],
                e[1],
                bar(self.density_before[i]),
                bar(self.density_after[i])
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// k-th order statistic by counting, without sorting.
    fn order_stat(values: &[f64], k: usize) -> f64 {
        for &v in values {
            let below = values.iter().filter(|&&x| x < v).count();
            let equal = values.iter().filter(|&&x| x == v).count();
            if below <= k && k < below + equal {
                return v;
            }
        }
        unreachable!()
    }

    fn oracle_quantile(values: &[f64], p: f64) -> f64 {
        let pos = p * (values.len() - 1) as f64;
        let lo = order_stat(values, pos.floor() as usize);
        let hi = order_stat(values, pos.ceil() as usize);
        lo + (hi - lo) * (pos - pos.floor())
    }

    #[test]
    fn fd_on_one_to_eight() {
        let values: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(oracle_quantile(&values, 0.25), 2.75);
        assert_eq!(oracle_quantile(&values, 0.75), 6.25);
        assert_eq!(fd_bin_width(&values).unwrap(), 3.5);
    }

    #[test]
    fn last_edge_covers_max() {
        let values = [0.0, 0.1, 0.7, 3.4657018025501043];
        for width in [0.1, 0.3, 0.7, 3.4657018025501043 / 7.0, 1.0 / 3.0] {
            let h = Histogram::build(&values, width).unwrap();
            for v in values {
                assert!(h.bin_of(v).is_ok(), "{v} at width {width}");
            }
            assert_eq!(h.counts().iter().sum::<usize>(), values.len());
        }
    }

    #[test]
    fn fd_degenerate_cases() {
        assert_eq!(fd_bin_width(&[4.0; 10]).unwrap(), 1.0);
        let h = Histogram::build(&[4.0; 10], 1.0).unwrap();
        assert_eq!(h.counts(), &[10]);
        // IQR = 0 but range > 0: Sturges with n = 8 gives 4 bins.
        let values = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 8.0];
        assert_eq!(fd_bin_width(&values).unwrap(), 2.0);
        assert!(matches!(fd_bin_width(&[]), Err(Error::EmptyInput)));
        assert!(fd_bin_width(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn fd_on_uniform_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let h = fd_bin_width(&values).unwrap();
        let expected = 2.0 * (oracle_quantile(&values, 0.75) - oracle_quantile(&values, 0.25)) / 10.0;
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 0.1).abs() / 0.1 < 0.05, "h = {h}");
    }

    #[test]
    fn build_examples() {
        // 0.5 opens the second bin, which is closed on the right and so
        // also holds the maximum 1.0.
        let h = Histogram::build(&[0.0, 0.5, 1.0], 0.5).unwrap();
        assert_eq!(h.counts(), &[1, 2]);
        assert_eq!(h.edges(), &[0.0, 0.5, 1.0]);
        let h = Histogram::build(&[3.0], 0.25).unwrap();
        assert_eq!(h.counts(), &[1]);
        let values: Vec<f64> = (0..10).map(f64::from).collect();
        let h = Histogram::build(&values, 5.0).unwrap();
        assert_eq!(h.counts(), &[5, 5]);
        assert!(Histogram::build(&[1.0, f64::INFINITY], 1.0).is_err());
        assert!(Histogram::build(&[1.0], 0.0).is_err());
        assert!(matches!(Histogram::build(&[0.0, 1e12], 1e-6), Err(Error::TooManyBins(_))));
    }

    #[test]
    fn lookup_examples() {
        let h = Histogram::build(&[0.0, 0.5, 1.0], 0.5).unwrap();
        assert_eq!(h.lookup(0.2).unwrap(), 1);
        assert_eq!(h.lookup(1.0).unwrap(), 2);
        assert_eq!(h.lookup(0.5).unwrap(), 2);
        assert!(matches!(h.lookup(-1.0), Err(Error::OutOfSupport { .. })));
        assert!(h.lookup(1.0001).is_err());
    }

    #[test]
    fn report_identity_and_constant() {
        let ws = WeightSeries::new(vec![0, 1, 2, 3, 4], vec![0.1, 0.2, 0.2, 3.0, 0.4]).unwrap();
        let r = density_report(&ws, &ws, Binning::Auto).unwrap();
        assert_eq!(r.density_before, r.density_after);

        let c = WeightSeries::new(vec![0, 1, 2], vec![2.0; 3]).unwrap();
        let r = density_report(&c, &c, Binning::Auto).unwrap();
        assert_eq!(r.n_bins(), 1);
        assert_eq!(r.density_before, vec![1.0]);
        assert_eq!(r.density_after, vec![1.0]);
    }

    #[test]
    fn report_csv_round_trip() {
        let a = WeightSeries::new(vec![0, 1, 2, 3], vec![0.0, 0.5, 1.0, 2.5]).unwrap();
        let b = WeightSeries::new(vec![1, 3], vec![0.5, 2.5]).unwrap();
        let r = density_report(&a, &b, Binning::FixedWidth(0.5)).unwrap();
        let mut buf = Vec::new();
        r.write_csv_to(&mut buf).unwrap();
        assert_eq!(DensityReport::read_csv(buf.as_slice()).unwrap(), r);
        assert!(r.render_ascii(20).lines().count() == r.n_bins() + 1);
    }

    proptest! {
        #[test]
        fn fd_matches_counting_oracle(values in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let h = fd_bin_width(&values).unwrap();
            let iqr = oracle_quantile(&values, 0.75) - oracle_quantile(&values, 0.25);
            if iqr > 0.0 {
                let expected = 2.0 * iqr / (values.len() as f64).cbrt();
                prop_assert!((h - expected).abs() <= 1e-12 * expected.max(1.0));
            } else {
                prop_assert!(h > 0.0);
            }
        }

        #[test]
        fn build_conserves_counts(values in prop::collection::vec(-1e3f64..1e3, 1..200), width in 0.01f64..100.0) {
            let h = Histogram::build(&values, width).unwrap();
            prop_assert_eq!(h.counts().iter().sum::<usize>(), values.len());
            prop_assert_eq!(h.n(), values.len());
            prop_assert!(h.edges().windows(2).all(|e| e[0] < e[1]));
            for &v in &values {
                prop_assert!(h.lookup(v).unwrap() >= 1);
            }
        }

        #[test]
        fn densities_integrate_to_one(
            a in prop::collection::vec(0.0f64..20.0, 1..300),
            b in prop::collection::vec(0.0f64..20.0, 1..300),
        ) {
            let before = WeightSeries::new((0..a.len()).collect(), a).unwrap();
            let after = WeightSeries::new((0..b.len()).collect(), b).unwrap();
            let r = density_report(&before, &after, Binning::Auto).unwrap();
            prop_assert!((DensityReport::integral(&r.density_before, &r.edges) - 1.0).abs() < 1e-9);
            prop_assert!((DensityReport::integral(&r.density_after, &r.edges) - 1.0).abs() < 1e-9);
            prop_assert!(r.density_before.iter().chain(&r.density_after).all(|d| *d >= 0.0));
        }
    }
}
