// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multivariate series storage, windowing, chronological splitting and a
//! seeded synthetic generator with rare ramp events.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable T×C series stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    channel_names: Vec<String>,
    values: Vec<f64>,
    n_steps: usize,
    interval_seconds: f64,
    target: usize,
}

impl TimeSeriesDataset {
    pub fn new(
        channel_names: Vec<String>,
        values: Vec<f64>,
        interval_seconds: f64,
        target_channel: &str,
    ) -> Result<Self> {
        if channel_names.is_empty() {
            return Err(Error::config("channel_names", "at least one channel is required"));
        }
        let mut seen = HashSet::new();
        for name in &channel_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateChannel(name.clone()));
            }
        }
        if !(interval_seconds.is_finite() && interval_seconds > 0.0) {
            return Err(Error::config("interval_seconds", "must be positive and finite"));
        }
        let c = channel_names.len();
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        if !values.len().is_multiple_of(c) {
            return Err(Error::ArityMismatch {
                row: values.len() / c,
                expected: c,
                found: values.len() % c,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        let target = channel_names
            .iter()
            .position(|n| n == target_channel)
            .ok_or_else(|| Error::UnknownChannel(target_channel.to_string()))?;
        Ok(Self {
            n_steps: values.len() / c,
            channel_names,
            values,
            interval_seconds,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.n_steps
    }

    pub fn is_empty(&self) -> bool {
        self.n_steps == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn interval_seconds(&self) -> f64 {
        self.interval_seconds
    }

    pub fn target_channel(&self) -> &str {
        &self.channel_names[self.target]
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn value(&self, t: usize, channel: usize) -> f64 {
        self.values[t * self.n_channels() + channel]
    }

    pub fn target_at(&self, t: usize) -> f64 {
        self.value(t, self.target)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.n_channels();
        &self.values[t * c..(t + 1) * c]
    }

    pub fn column(&self, channel: usize) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .skip(channel)
            .step_by(self.n_channels())
            .copied()
    }

    /// Same data with a different target channel.
    pub fn with_target(&self, target_channel: &str) -> Result<Self> {
        let target = self.channel_index(target_channel)?;
        Ok(Self {
            target,
            ..self.clone()
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.channel_names)?;
        for t in 0..self.n_steps {
            w.write_record(self.row(t).iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Result of [`load_csv`]: the dataset plus the number of rows dropped for
/// unparseable or non-finite fields.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub dataset: TimeSeriesDataset,
    pub dropped_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, target_channel: &str, interval_seconds: f64) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file), target_channel, interval_seconds)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    target_channel: &str,
    interval_seconds: f64,
) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(Error::EmptyData),
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    let c = names.len();

    let mut values = Vec::new();
    let mut dropped_rows = 0;
    let mut row_buf = Vec::with_capacity(c);
    for (i, record) in records.enumerate() {
        let record = record?;
        if record.len() != c {
            return Err(Error::ArityMismatch {
                row: i + 1,
                expected: c,
                found: record.len(),
            });
        }
        row_buf.clear();
        let clean = record.iter().all(|field| match field.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                row_buf.push(v);
                true
            }
            _ => false,
        });
        if clean {
            values.extend_from_slice(&row_buf);
        } else {
            dropped_rows += 1;
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    let dataset = TimeSeriesDataset::new(names, values, interval_seconds, target_channel)?;
    Ok(Loaded {
        dataset,
        dropped_rows,
    })
}

/// Input window of `length` steps forecasting `horizon` steps ahead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub horizon: usize,
    pub target_channel: String,
}

impl WindowSpec {
    pub fn new(length: usize, horizon: usize, target_channel: impl Into<String>) -> Result<Self> {
        let spec = Self {
            length,
            horizon,
            target_channel: target_channel.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::config("window.length", "must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("window.horizon", "must be >= 1"));
        }
        Ok(())
    }

    /// Steps covered by one window plus its target, `L + Δ`.
    pub fn span(&self) -> usize {
        self.length + self.horizon
    }
}

/// Half-open index range `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if end <= start {
            return Err(Error::EmptyRange);
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: usize) -> bool {
        (self.start..self.end).contains(&t)
    }

    pub fn contains_range(&self, other: &IndexRange) -> bool {
        other.start >= self.start && other.end <= self.end
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Indices `t` with a full input window behind them and a target `Δ` steps
/// ahead: `L-1 ..= T-Δ-1`.
pub fn valid_indices(dataset: &TimeSeriesDataset, spec: &WindowSpec) -> Result<IndexRange> {
    spec.validate()?;
    let n = dataset.len();
    if n < spec.span() {
        return Err(Error::SeriesTooShort {
            len: n,
            required: spec.span(),
        });
    }
    Ok(IndexRange {
        start: spec.length - 1,
        end: n - spec.horizon,
    })
}

/// Borrowed L×C view of consecutive rows.
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    data: &'a [f64],
    channels: usize,
}

impl<'a> Window<'a> {
    pub fn new(data: &'a [f64], channels: usize) -> Self {
        assert!(channels > 0 && data.len().is_multiple_of(channels));
        Self { data, channels }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn cols(&self) -> usize {
        self.channels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.channels + col]
    }

    pub fn row(&self, row: usize) -> &'a [f64] {
        &self.data[row * self.channels..(row + 1) * self.channels]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + 'a {
        self.data.iter().skip(col).step_by(self.channels).copied()
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// Window of rows `t-L+1 ..= t` and the target value at `t+Δ`.
pub fn window_at<'a>(
    dataset: &'a TimeSeriesDataset,
    spec: &WindowSpec,
    t: usize,
) -> Result<(Window<'a>, f64)> {
    let valid = valid_indices(dataset, spec)?;
    if !valid.contains(t) {
        return Err(Error::IndexOutOfRange {
            index: t,
            start: valid.start,
            end: valid.end,
        });
    }
    let target = dataset.channel_index(&spec.target_channel)?;
    let c = dataset.n_channels();
    let first = t + 1 - spec.length;
    let window = Window::new(&dataset.values[first * c..(t + 1) * c], c);
    Ok((window, dataset.value(t + spec.horizon, target)))
}

/// Chronological train/eval split of the valid indices.
///
/// The first `⌊fraction·V⌋` valid indices form the train range. The next
/// `L+Δ` are skipped, and whatever remains is the eval range, so no eval
/// window or target touches a row used by a training window or target.
pub fn split_chronological(
    dataset: &TimeSeriesDataset,
    spec: &WindowSpec,
    train_fraction: f64,
) -> Result<(IndexRange, IndexRange)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config("train_fraction", "must lie strictly between 0 and 1"));
    }
    let valid = valid_indices(dataset, spec)?;
    let n_train = (train_fraction * valid.len() as f64).floor() as usize;
    if n_train == 0 {
        return Err(Error::EmptyTrainSplit);
    }
    let train = IndexRange {
        start: valid.start,
        end: valid.start + n_train,
    };
    let eval_start = train.end + spec.span();
    if eval_start >= valid.end {
        return Err(Error::EmptyEvalSplit);
    }
    Ok((
        train,
        IndexRange {
            start: eval_start,
            end: valid.end,
        },
    ))
}

/// Parameters of the synthetic generator.
///
/// The target is `baseline_level + noise + event`, where `noise` is a
/// stationary AR(1) process with per-step reversion `mean_reversion` and
/// stationary standard deviation `noise_std`. Each step outside a ramp
/// starts a new event with probability `event_probability`; the event
/// component then rises linearly by `ramp_magnitude` over `ramp_duration`
/// steps and decays geometrically at the reversion rate afterwards.
///
/// Exogenous channel `j` carries the ramp indicator shifted `10·j` steps
/// earlier, plus Gaussian noise, so channel 0 tracks ongoing ramps and the
/// others announce them ahead of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub length: usize,
    pub baseline_level: f64,
    pub mean_reversion: f64,
    pub noise_std: f64,
    pub event_probability: f64,
    pub ramp_magnitude: f64,
    pub ramp_duration: usize,
    pub exogenous_channels: usize,
    pub exogenous_noise_std: f64,
    pub interval_seconds: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            length: 100_000,
            baseline_level: 70.0,
            mean_reversion: 0.01,
            noise_std: 0.5,
            event_probability: 0.001,
            ramp_magnitude: 10.0,
            ramp_duration: 50,
            exogenous_channels: 2,
            exogenous_noise_std: 0.1,
            interval_seconds: 10.0,
            seed: 7,
        }
    }
}

pub const SYNTHETIC_TARGET: &str = "temp";
pub const EXOGENOUS_LEAD_STEPS: usize = 10;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::config("length", "must be >= 2"));
        }
        if !(self.mean_reversion > 0.0 && self.mean_reversion <= 1.0) {
            return Err(Error::config("mean_reversion", "must lie in (0, 1]"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("noise_std", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.event_probability) {
            return Err(Error::config("event_probability", "must lie in [0, 1]"));
        }
        if !self.ramp_magnitude.is_finite() {
            return Err(Error::config("ramp_magnitude", "must be finite"));
        }
        if self.ramp_duration == 0 {
            return Err(Error::config("ramp_duration", "must be >= 1"));
        }
        if !(self.exogenous_noise_std.is_finite() && self.exogenous_noise_std >= 0.0) {
            return Err(Error::config("exogenous_noise_std", "must be finite and >= 0"));
        }
        if !self.baseline_level.is_finite() {
            return Err(Error::config("baseline_level", "must be finite"));
        }
        if !(self.interval_seconds.is_finite() && self.interval_seconds > 0.0) {
            return Err(Error::config("interval_seconds", "must be positive"));
        }
        Ok(())
    }

    /// Also checks `T > L + Δ` for the window the series will feed.
    pub fn validate_for(&self, spec: &WindowSpec) -> Result<()> {
        self.validate()?;
        if self.length <= spec.span() {
            return Err(Error::config(
                "length",
                format!("must exceed window length + horizon = {}", spec.span()),
            ));
        }
        Ok(())
    }

    pub fn channel_names(&self) -> Vec<String> {
        std::iter::once(SYNTHETIC_TARGET.to_string())
            .chain((0..self.exogenous_channels).map(|j| format!("load{j}")))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticSeries {
    pub dataset: TimeSeriesDataset,
    /// Steps at which a ramp event started.
    pub event_starts: Vec<usize>,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<TimeSeriesDataset> {
    generate_synthetic_with_events(config).map(|s| s.dataset)
}

pub fn generate_synthetic_with_events(config: &SyntheticConfig) -> Result<SyntheticSeries> {
    config.validate()?;
    let n = config.length;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rho = 1.0 - config.mean_reversion;
    let innovation = config.noise_std * (1.0 - rho * rho).sqrt();
    let step = config.ramp_magnitude / config.ramp_duration as f64;

    let mut target = Vec::with_capacity(n);
    let mut ramping = vec![false; n];
    let mut event_starts = Vec::new();

    let z: f64 = rng.sample(StandardNormal);
    let mut noise = config.noise_std * z;
    let mut event = 0.0;
    let mut ramp_left = 0usize;
    for (t, active) in ramping.iter_mut().enumerate() {
        if t > 0 {
            let z: f64 = rng.sample(StandardNormal);
            noise = rho * noise + innovation * z;
        }
        let u: f64 = rng.random();
        if ramp_left == 0 && u < config.event_probability {
            ramp_left = config.ramp_duration;
            event_starts.push(t);
        }
        if ramp_left > 0 {
            event += step;
            ramp_left -= 1;
            *active = true;
        } else {
            event *= rho;
        }
        target.push(config.baseline_level + noise + event);
    }

    let c = 1 + config.exogenous_channels;
    let mut values = Vec::with_capacity(n * c);
    for (t, &y) in target.iter().enumerate() {
        values.push(y);
        for j in 0..config.exogenous_channels {
            let ahead = t + EXOGENOUS_LEAD_STEPS * j;
            let indicator = if ahead < n && ramping[ahead] { 1.0 } else { 0.0 };
            let z: f64 = rng.sample(StandardNormal);
            values.push(indicator + config.exogenous_noise_std * z);
        }
    }
    let dataset = TimeSeriesDataset::new(
        config.channel_names(),
        values,
        config.interval_seconds,
        SYNTHETIC_TARGET,
    )?;
    Ok(SyntheticSeries {
        dataset,
        event_starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> TimeSeriesDataset {
        TimeSeriesDataset::new(vec!["y".into()], (0..n).map(|v| v as f64).collect(), 10.0, "y").unwrap()
    }

    #[test]
    fn loads_clean_csv() {
        let loaded = read_csv("temp,speed\n1,2\n3,4\n5,6\n".as_bytes(), "temp", 10.0).unwrap();
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dataset.n_channels(), 2);
        assert_eq!(loaded.dropped_rows, 0);
        assert_eq!(loaded.dataset.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn drops_nan_rows() {
        let loaded = read_csv("temp,speed\n1,2\nNaN,4\n5,6\n".as_bytes(), "temp", 10.0).unwrap();
        assert_eq!(loaded.dataset.len(), 2);
        assert_eq!(loaded.dropped_rows, 1);
        let loaded = read_csv("a\n1\nabc\ninf\n2\n".as_bytes(), "a", 1.0).unwrap();
        assert_eq!(loaded.dropped_rows, 2);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            read_csv("temp,speed\n".as_bytes(), "temp", 10.0),
            Err(Error::EmptyData)
        ));
        assert!(matches!(read_csv("".as_bytes(), "temp", 10.0), Err(Error::EmptyData)));
    }

    #[test]
    fn arity_and_target_errors() {
        assert!(matches!(
            read_csv("a,b\n1,2\n3\n".as_bytes(), "a", 1.0),
            Err(Error::ArityMismatch { row: 2, expected: 2, found: 1 })
        ));
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), "c", 1.0),
            Err(Error::UnknownChannel(_))
        ));
        assert!(matches!(
            read_csv("a,a\n1,2\n".as_bytes(), "a", 1.0),
            Err(Error::DuplicateChannel(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "a", 1.0),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn valid_index_boundaries() {
        let spec = WindowSpec::new(30, 30, "y").unwrap();
        let r = valid_indices(&ramp(100), &spec).unwrap();
        assert_eq!((r.start, r.end - 1, r.len()), (29, 69, 41));
        let r = valid_indices(&ramp(60), &spec).unwrap();
        assert_eq!((r.start, r.len()), (29, 1));
        assert!(matches!(
            valid_indices(&ramp(59), &spec),
            Err(Error::SeriesTooShort { len: 59, required: 60 })
        ));
    }

    #[test]
    fn window_slicing() {
        let ds = ramp(10);
        let spec = WindowSpec::new(2, 1, "y").unwrap();
        let (w, target) = window_at(&ds, &spec, 3).unwrap();
        assert_eq!(w.as_slice(), &[2.0, 3.0]);
        assert_eq!(target, 4.0);
        let (w, _) = window_at(&ds, &spec, 1).unwrap();
        assert_eq!(w.get(0, 0), 0.0);
        assert!(matches!(window_at(&ds, &spec, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(window_at(&ds, &spec, 9), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn window_targets_exhaustive() {
        let ds = TimeSeriesDataset::new(
            vec!["x".into(), "y".into()],
            (0..40).map(|v| (v * v) as f64).collect(),
            1.0,
            "y",
        )
        .unwrap();
        for l in 1..5 {
            for h in 1..5 {
                let spec = WindowSpec::new(l, h, "y").unwrap();
                let valid = valid_indices(&ds, &spec).unwrap();
                assert_eq!(valid.len(), ds.len() - l - h + 1);
                for t in valid.iter() {
                    let (w, target) = window_at(&ds, &spec, t).unwrap();
                    assert_eq!(target, ds.value(t + h, 1));
                    assert_eq!(w.rows(), l);
                    assert_eq!(w.row(l - 1), ds.row(t));
                }
            }
        }
    }

    #[test]
    fn split_arithmetic() {
        // V = 1000 with L + Δ = 60.
        let spec = WindowSpec::new(30, 30, "y").unwrap();
        let ds = ramp(1000 + 59);
        let (train, eval) = split_chronological(&ds, &spec, 0.7).unwrap();
        assert_eq!(train.len(), 700);
        assert_eq!(eval.start - train.end, 60);
        assert_eq!(eval.len(), 240);

        let ds = ramp(200 + 59);
        let (train, eval) = split_chronological(&ds, &spec, 0.5).unwrap();
        assert_eq!((train.len(), eval.len()), (100, 40));

        assert!(matches!(
            split_chronological(&ds, &spec, 0.999),
            Err(Error::EmptyEvalSplit)
        ));
        assert!(split_chronological(&ds, &spec, 1.0).is_err());
        assert!(split_chronological(&ds, &spec, 0.0).is_err());
    }

    #[test]
    fn split_has_no_leakage() {
        let spec = WindowSpec::new(7, 5, "y").unwrap();
        let ds = ramp(500);
        for frac in [0.1, 0.3, 0.5, 0.8] {
            let (train, eval) = split_chronological(&ds, &spec, frac).unwrap();
            let last_train_row = train.end - 1 + spec.horizon;
            let first_eval_row = eval.start + 1 - spec.length;
            assert!(first_eval_row > last_train_row);
            assert!(eval.start - train.end >= spec.span());
        }
    }

    #[test]
    fn synthetic_is_reproducible() {
        let config = SyntheticConfig {
            length: 5_000,
            ..Default::default()
        };
        let a = generate_synthetic(&config).unwrap();
        let b = generate_synthetic(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_channels(), 3);
        let other = generate_synthetic(&SyntheticConfig { seed: 8, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn synthetic_rejects_bad_fields() {
        let bad = SyntheticConfig {
            event_probability: 1.5,
            ..Default::default()
        };
        match generate_synthetic(&bad) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "event_probability"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = SyntheticConfig {
            ramp_duration: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let spec = WindowSpec::new(30, 30, "temp").unwrap();
        let short = SyntheticConfig {
            length: 60,
            ..Default::default()
        };
        assert!(short.validate_for(&spec).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = generate_synthetic(&SyntheticConfig {
            length: 300,
            ..Default::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv_to(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "temp", 10.0).unwrap();
        assert_eq!(back.dataset, ds);
    }
}
