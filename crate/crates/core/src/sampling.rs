// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weight-based under-sampling.
//!
//! Each sampler maps a weight to a relative inclusion weight: a threshold
//! step (TUS), a power of the max-normalized weight (SUS), or the inverse
//! count of the weight's histogram bin (IHS). A fixed-size sample is then
//! drawn without replacement by exponential keys: index `i` gets
//! `key_i = ln(u_i) / q_i` with `u_i` drawn from a generator seeded by
//! `(seed, i)`, and the indices with the largest keys are kept.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::IndexRange;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::histogram::{Binning, Histogram};
use crate::seed::index_rng;
use crate::weights::WeightSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SamplerSpec {
    None,
    /// Keep only weights strictly above `tau`, uniformly.
    Tus { tau: f64 },
    /// Relative probability `(w / max w)^factor`.
    Sus { factor: f64 },
    /// Relative probability `1 / h(w)`.
    Ihs { binning: Binning },
}

pub const VALID_LABELS: &str = "None, TUS-<tau>, SUS-<factor>, IHS, IHS-<bin width>";

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplerSpec::Tus { tau } if !(tau.is_finite() && tau >= 0.0) => {
                Err(Error::config("sampler.tau", "must be finite and >= 0"))
            }
            SamplerSpec::Sus { factor } if !(factor.is_finite() && factor > 0.0) => {
                Err(Error::config("sampler.factor", "must be finite and > 0"))
            }
            SamplerSpec::Ihs {
                binning: Binning::FixedWidth(h),
            } if !(h.is_finite() && h > 0.0) => Err(Error::config("sampler.width", "must be > 0")),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn parameters(&self) -> serde_json::Value {
        use serde_json::json;
        match *self {
            SamplerSpec::None => json!({}),
            SamplerSpec::Tus { tau } => json!({ "tau": tau }),
            SamplerSpec::Sus { factor } => json!({ "factor": factor }),
            SamplerSpec::Ihs { binning: Binning::Auto } => json!({ "binning": "freedman_diaconis" }),
            SamplerSpec::Ihs {
                binning: Binning::FixedWidth(h),
            } => json!({ "binning": "fixed_width", "width": h }),
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerSpec::None => write!(f, "None"),
            SamplerSpec::Tus { tau } => write!(f, "TUS-{tau}"),
            SamplerSpec::Sus { factor } => write!(f, "SUS-{factor}"),
            SamplerSpec::Ihs { binning: Binning::Auto } => write!(f, "IHS"),
            SamplerSpec::Ihs {
                binning: Binning::FixedWidth(h),
            } => write!(f, "IHS-{h}"),
        }
    }
}

impl FromStr for SamplerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownSampler {
            label: s.to_string(),
            valid: VALID_LABELS.to_string(),
        };
        let label = s.trim();
        let number = |rest: &str| rest.trim().parse::<f64>().map_err(|_| unknown());
        let spec = if label.eq_ignore_ascii_case("none") {
            SamplerSpec::None
        } else if label.eq_ignore_ascii_case("ihs") {
            SamplerSpec::Ihs { binning: Binning::Auto }
        } else if let Some((kind, rest)) = label.split_once('-') {
            match kind.trim().to_ascii_uppercase().as_str() {
                "TUS" => SamplerSpec::Tus { tau: number(rest)? },
                "SUS" => SamplerSpec::Sus { factor: number(rest)? },
                "IHS" => SamplerSpec::Ihs {
                    binning: Binning::FixedWidth(number(rest)?),
                },
                _ => return Err(unknown()),
            }
        } else {
            return Err(unknown());
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for SamplerSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SamplerSpec> for String {
    fn from(s: SamplerSpec) -> String {
        s.to_string()
    }
}

/// Relative inclusion weight of a single weight value.
///
/// For SUS, `w` must already be normalized to `[0, 1]`; [`draw`] does
/// this by dividing by the series maximum.
pub fn inclusion_weight(sampler: &SamplerSpec, w: f64, hist: Option<&Histogram>) -> Result<f64> {
    match *sampler {
        SamplerSpec::None => Ok(1.0),
        SamplerSpec::Tus { tau } => Ok(if w > tau { 1.0 } else { 0.0 }),
        SamplerSpec::Sus { factor } => Ok(w.powf(factor)),
        SamplerSpec::Ihs { .. } => {
            let hist = hist.ok_or(Error::MissingHistogram)?;
            Ok(1.0 / hist.lookup(w)? as f64)
        }
    }
}

/// Relative inclusion weight for every entry of `series`.
pub fn inclusion_weights(sampler: &SamplerSpec, series: &WeightSeries) -> Result<Vec<f64>> {
    sampler.validate()?;
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let weights = series.weights();
    match sampler {
        SamplerSpec::Sus { .. } => {
            let max = series.max();
            if max <= 0.0 {
                return Err(Error::AllWeightsZero);
            }
            weights
                .iter()
                .map(|w| inclusion_weight(sampler, w / max, None))
                .collect()
        }
        SamplerSpec::Ihs { binning } => {
            let hist = binning.histogram(weights)?;
            weights
                .iter()
                .map(|&w| inclusion_weight(sampler, w, Some(&hist)))
                .collect()
        }
        _ => weights
            .iter()
            .map(|&w| inclusion_weight(sampler, w, None))
            .collect(),
    }
}

/// Where a sample came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub requested: usize,
    pub source_range: IndexRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleIndexSet {
    pub indices: Vec<usize>,
    pub provenance: Provenance,
}

impl SampleIndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index"])?;
        for i in &self.indices {
            w.write_record([i.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_indices_csv<R: Read>(reader: R) -> Result<Vec<usize>> {
        let mut rdr = csv::Reader::from_reader(reader);
        if rdr.headers()?.iter().next() != Some("index") {
            return Err(Error::MissingColumn("index".into()));
        }
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let v = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::MalformedMatrix(format!("bad index `{}`", &rec[0])))?;
            out.push(v);
        }
        Ok(out)
    }

    pub fn write_provenance_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(file, &self.provenance)?;
        Ok(())
    }
}

/// Draws `min(n, #eligible)` distinct indices from `series`.
pub fn draw(sampler: &SamplerSpec, series: &WeightSeries, n: usize, seed: u64) -> Result<SampleIndexSet> {
    draw_with(sampler, series, n, seed, Execution::default())
}

pub fn draw_with(
    sampler: &SamplerSpec,
    series: &WeightSeries,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<SampleIndexSet> {
    if n == 0 {
        return Err(Error::config("n", "sample size must be >= 1"));
    }
    let relative = inclusion_weights(sampler, series)?;
    let eligible: Vec<(usize, f64)> = series
        .indices()
        .iter()
        .zip(&relative)
        .filter(|(_, &q)| q > 0.0 && q.is_finite())
        .map(|(&i, &q)| (i, q))
        .collect();
    if eligible.is_empty() {
        return Err(Error::AllWeightsZero);
    }
    let indices = top_keys(&eligible, n, seed, exec);
    let idx = series.indices();
    Ok(SampleIndexSet {
        indices,
        provenance: Provenance {
            sampler: sampler.label(),
            parameters: sampler.parameters(),
            seed,
            requested: n,
            source_range: IndexRange {
                start: idx[0],
                end: idx[idx.len() - 1] + 1,
            },
        },
    })
}

/// Exponential key of one index; larger keys are drawn first.
pub fn sampling_key(seed: u64, index: usize, relative_weight: f64) -> f64 {
    // 1 - u lies in (0, 1], so the log is finite.
    let u = 1.0 - index_rng(seed, index as u64).random::<f64>();
    u.ln() / relative_weight
}

fn top_keys(eligible: &[(usize, f64)], n: usize, seed: u64, exec: Execution) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = exec.map(eligible, |&(i, q)| (sampling_key(seed, i, q), i));
    let by_key = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if n < keyed.len() {
        keyed.select_nth_unstable_by(n - 1, by_key);
        keyed.truncate(n);
    }
    let mut out: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(weights: &[f64]) -> WeightSeries {
        WeightSeries::new((0..weights.len()).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn tus_step() {
        let s = SamplerSpec::Tus { tau: 2.0 };
        assert_eq!(inclusion_weight(&s, 5.0, None).unwrap(), 1.0);
        assert_eq!(inclusion_weight(&s, 1.0, None).unwrap(), 0.0);
        assert_eq!(inclusion_weight(&s, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn sus_power() {
        let s = SamplerSpec::Sus { factor: 3.0 };
        assert_eq!(inclusion_weight(&s, 0.5, None).unwrap(), 0.125);
        let lo = inclusion_weight(&s, 0.2, None).unwrap();
        let hi = inclusion_weight(&s, 0.8, None).unwrap();
        assert!((lo - 0.008).abs() < 1e-15 && (hi - 0.512).abs() < 1e-15);
        assert_eq!(hi / lo, 64.0);
    }

    #[test]
    fn ihs_equal_bin_mass() {
        let mut values = vec![0.25; 90];
        values.extend([1.5; 9]);
        values.push(2.75);
        let hist = Histogram::build(&values, 1.0).unwrap();
        assert_eq!(hist.counts(), &[90, 9, 1]);
        let s = SamplerSpec::Ihs { binning: Binning::FixedWidth(1.0) };
        let q: Vec<f64> = [0.25, 1.5, 2.75]
            .iter()
            .map(|&w| inclusion_weight(&s, w, Some(&hist)).unwrap())
            .collect();
        assert_eq!(q, vec![1.0 / 90.0, 1.0 / 9.0, 1.0]);
        for (bin, &count) in hist.counts().iter().enumerate() {
            assert!((q[bin] * count as f64 - 1.0).abs() < 1e-15);
        }
        assert!(matches!(inclusion_weight(&s, 0.25, None), Err(Error::MissingHistogram)));
        assert!(matches!(
            inclusion_weight(&s, 7.0, Some(&hist)),
            Err(Error::OutOfSupport { .. })
        ));
    }

    #[test]
    fn none_is_uniform() {
        assert_eq!(inclusion_weight(&SamplerSpec::None, 123.0, None).unwrap(), 1.0);
    }

    #[test]
    fn tus_draw_returns_above_threshold_set() {
        let ws = series(&[0.0, 0.0, 5.0, 7.0]);
        let s = draw(&SamplerSpec::Tus { tau: 2.0 }, &ws, 10, 1).unwrap();
        assert_eq!(s.indices, vec![2, 3]);
        assert_eq!(s.provenance.sampler, "TUS-2");
        assert_eq!(s.provenance.source_range, IndexRange { start: 0, end: 4 });
    }

    #[test]
    fn all_zero_is_an_error() {
        let ws = series(&[0.0, 0.0]);
        assert!(matches!(
            draw(&SamplerSpec::Sus { factor: 1.0 }, &ws, 1, 1),
            Err(Error::AllWeightsZero)
        ));
        assert!(matches!(
            draw(&SamplerSpec::Tus { tau: 0.0 }, &ws, 1, 1),
            Err(Error::AllWeightsZero)
        ));
    }

    #[test]
    fn draw_is_deterministic_across_execution_modes() {
        let ws = series(&(0..5000).map(|i| ((i * 37) % 101) as f64 / 10.0).collect::<Vec<_>>());
        for sampler in [
            SamplerSpec::None,
            SamplerSpec::Sus { factor: 3.0 },
            SamplerSpec::Ihs { binning: Binning::Auto },
        ] {
            let a = draw_with(&sampler, &ws, 700, 9, Execution::Serial).unwrap();
            let b = draw_with(&sampler, &ws, 700, 9, Execution::Parallel).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 700);
            assert!(a.indices.windows(2).all(|p| p[0] < p[1]));
            let c = draw(&sampler, &ws, 700, 10).unwrap();
            assert_ne!(a.indices, c.indices);
        }
    }

    #[test]
    fn labels_round_trip() {
        for label in ["None", "TUS-2", "SUS-1", "SUS-3", "SUS-0.5", "IHS", "IHS-0.25"] {
            let s: SamplerSpec = label.parse().unwrap();
            assert_eq!(s.to_string(), label);
        }
        assert_eq!("sus-3".parse::<SamplerSpec>().unwrap(), SamplerSpec::Sus { factor: 3.0 });
        match "FOO-1".parse::<SamplerSpec>() {
            Err(Error::UnknownSampler { valid, .. }) => assert!(valid.contains("SUS-<factor>")),
            other => panic!("unexpected {other:?}"),
        }
        assert!("SUS-0".parse::<SamplerSpec>().is_err());
        assert!("TUS--1".parse::<SamplerSpec>().is_err());
    }

    #[test]
    fn index_csv_round_trip() {
        let ws = series(&[1.0; 50]);
        let s = draw(&SamplerSpec::None, &ws, 10, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv_to(&mut buf).unwrap();
        assert_eq!(SampleIndexSet::read_indices_csv(buf.as_slice()).unwrap(), s.indices);
    }
}
