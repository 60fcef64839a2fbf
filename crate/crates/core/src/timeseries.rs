//! Sensor record ingestion, grid preprocessing and synthetic data.
//!
//! The preprocessing chain mirrors what is applied to the field data before
//! any transmission analysis:
//!
//! 1. [`ingest_csv`] reads `device_id,created_at,PM10,PM2.5,RH,Temp` rows.
//! 2. [`resample_and_interpolate`] snaps records onto a uniform grid and
//!    fills gaps linearly; the original presence of every cell is kept.
//! 3. [`discard_sparse_months`] drops device-months with more than 70 %
//!    missing cells and turns the rest into independent virtual devices.
//! 4. [`moving_average`] applies a trailing mean (window 5 by default).
//!
//! Concentrations are stored in µg/m³ ([`PM_UNIT`]).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["device_id", "created_at", "PM10", "PM2.5", "RH", "Temp"];
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S %z";
pub const DEFAULT_CADENCE: u32 = 30;
pub const DEFAULT_MA_WINDOW: usize = 5;
pub const MAX_MISSING_FRACTION: f64 = 0.70;
pub const PM_UNIT: &str = "µg/m³";

/// One of the four sensed quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Temp,
    Rh,
    Pm25,
    Pm10,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::Temp, Param::Rh, Param::Pm25, Param::Pm10];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::Temp => "temp",
            Param::Rh => "rh",
            Param::Pm25 => "pm25",
            Param::Pm10 => "pm10",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Param::Temp => "°C",
            Param::Rh => "%",
            Param::Pm25 | Param::Pm10 => PM_UNIT,
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub device_id: String,
    /// UTC seconds.
    pub created_at: i64,
    pub pm10: Option<f64>,
    pub pm25: Option<f64>,
    pub rh: Option<f64>,
    pub temp: Option<f64>,
}

impl RawRecord {
    pub fn get(&self, param: Param) -> Option<f64> {
        match param {
            Param::Temp => self.temp,
            Param::Rh => self.rh,
            Param::Pm25 => self.pm25,
            Param::Pm10 => self.pm10,
        }
    }
}

/// A row that parsed as CSV but violated a value invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Ingested {
    pub records: Vec<RawRecord>,
    pub rejected: Vec<RejectedRow>,
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(file)
}

/// Parses sensor rows from any reader.
///
/// Timestamp format violations abort with the offending line number. Rows
/// with unparseable or out-of-range values are collected in
/// [`Ingested::rejected`].
pub fn read_csv<R: Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.iter().map(String::as_str).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Header {
            found: header,
            expected: CSV_HEADER.iter().map(|s| s.to_string()).collect(),
        });
    }

    let mut out = Ingested::default();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CSV_HEADER.len() {
            out.rejected.push(RejectedRow {
                line,
                reason: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
            continue;
        }
        let created_at = parse_timestamp(&row[1]).ok_or_else(|| Error::Row {
            line,
            message: format!("timestamp {:?} does not match yyyy-MM-dd HH:mm:ss Z", &row[1]),
        })?;
        match parse_values(&row) {
            Ok([pm10, pm25, rh, temp]) => out.records.push(RawRecord {
                device_id: row[0].to_owned(),
                created_at,
                pm10,
                pm25,
                rh,
                temp,
            }),
            Err(reason) => out.rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(out)
}

fn parse_timestamp(s: &str) -> Option<i64> {
    DateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok().map(|t| t.timestamp())
}

fn parse_values(row: &csv::StringRecord) -> std::result::Result<[Option<f64>; 4], String> {
    let mut vals = [None; 4];
    for (slot, (i, name)) in vals.iter_mut().zip([(2, "PM10"), (3, "PM2.5"), (4, "RH"), (5, "Temp")]) {
        let cell = &row[i];
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell.parse().map_err(|_| format!("{name} value {cell:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{name} value {cell:?} is not finite"));
        }
        *slot = Some(v);
    }
    let [pm10, pm25, rh, _] = vals;
    if pm10.is_some_and(|v| v < 0.0) || pm25.is_some_and(|v| v < 0.0) {
        return Err("negative concentration".into());
    }
    if rh.is_some_and(|v| !(0.0..=100.0).contains(&v)) {
        return Err("relative humidity outside [0, 100]".into());
    }
    Ok(vals)
}

pub fn format_timestamp(t: i64) -> String {
    Utc.timestamp_opt(t, 0)
        .single()
        .map(|d| d.format("%Y-%m-%d %H:%M:%S +0000").to_string())
        .unwrap_or_default()
}

/// Writes preprocessed series back out in the ingest schema.
pub fn write_csv<W: Write>(series: &[SensorSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for s in series {
        for (i, sample) in s.samples.iter().enumerate() {
            let cell = |p: Param| {
                if sample.present[p.index()] {
                    format!("{:.4}", sample.values[p.index()])
                } else {
                    String::new()
                }
            };
            w.write_record([
                s.device_id.clone(),
                format_timestamp(s.time_at(i)),
                cell(Param::Pm10),
                cell(Param::Pm25),
                cell(Param::Rh),
                cell(Param::Temp),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    /// Indexed by [`Param::index`].
    pub values: [f64; 4],
    /// Whether the cell was observed before gap filling.
    pub present: [bool; 4],
}

impl Sample {
    pub fn observed(values: [f64; 4]) -> Self {
        Sample { values, present: [true; 4] }
    }

    pub fn get(&self, p: Param) -> f64 {
        self.values[p.index()]
    }
}

/// A uniformly gridded multi-parameter time series for one device.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorSeries {
    pub device_id: String,
    pub start_time: i64,
    pub cadence: u32,
    pub pm_unit: &'static str,
    pub samples: Vec<Sample>,
}

impl SensorSeries {
    /// Builds a fully observed series from `[temp, rh, pm25, pm10]` rows.
    pub fn from_rows(device_id: impl Into<String>, start_time: i64, cadence: u32, rows: &[[f64; 4]]) -> Self {
        SensorSeries {
            device_id: device_id.into(),
            start_time,
            cadence,
            pm_unit: PM_UNIT,
            samples: rows.iter().copied().map(Sample::observed).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, slot: usize) -> i64 {
        self.start_time + slot as i64 * self.cadence as i64
    }

    pub fn column(&self, p: Param) -> Vec<f64> {
        self.samples.iter().map(|s| s.values[p.index()]).collect()
    }

    pub fn presence_ratio(&self) -> f64 {
        let cells = 4 * self.samples.len();
        if cells == 0 {
            return 0.0;
        }
        let present: usize = self.samples.iter().map(|s| s.present.iter().filter(|&&b| b).count()).sum();
        present as f64 / cells as f64
    }

    fn slice(&self, range: std::ops::Range<usize>, device_id: String) -> SensorSeries {
        SensorSeries {
            device_id,
            start_time: self.time_at(range.start),
            cadence: self.cadence,
            pm_unit: self.pm_unit,
            samples: self.samples[range].to_vec(),
        }
    }
}

/// Snaps records to a uniform grid and fills missing cells.
///
/// Records landing in the same slot are averaged. Interior gaps are filled
/// by linear interpolation between the nearest observed neighbours; leading
/// and trailing gaps repeat the nearest observed value.
pub fn resample_and_interpolate(records: &[RawRecord], cadence: u32) -> Result<SensorSeries> {
    if cadence == 0 {
        return Err(Error::invalid("cadence must be positive"));
    }
    let first = records.first().ok_or(Error::Empty)?;
    if let Some(other) = records.iter().find(|r| r.device_id != first.device_id) {
        return Err(Error::MixedDevices(first.device_id.clone(), other.device_id.clone()));
    }
    let t0 = records.iter().map(|r| r.created_at).min().unwrap_or(first.created_at);
    let t1 = records.iter().map(|r| r.created_at).max().unwrap_or(first.created_at);
    let cad = cadence as i64;
    let slot_of = |t: i64| ((t - t0) as f64 / cad as f64).round() as usize;
    let n = slot_of(t1) + 1;

    let mut sums = vec![[0.0f64; 4]; n];
    let mut counts = vec![[0u32; 4]; n];
    for r in records {
        let slot = slot_of(r.created_at);
        for p in Param::ALL {
            if let Some(v) = r.get(p) {
                sums[slot][p.index()] += v;
                counts[slot][p.index()] += 1;
            }
        }
    }

    let mut samples: Vec<Sample> = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| {
            let mut sample = Sample { values: [f64::NAN; 4], present: [false; 4] };
            for k in 0..4 {
                if c[k] > 0 {
                    sample.values[k] = s[k] / c[k] as f64;
                    sample.present[k] = true;
                }
            }
            sample
        })
        .collect();

    for p in Param::ALL {
        let k = p.index();
        let known: Vec<usize> = (0..n).filter(|&i| samples[i].present[k]).collect();
        let (&lo, &hi) = match (known.first(), known.last()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::NoPresentValues(p.name())),
        };
        for i in 0..lo {
            samples[i].values[k] = samples[lo].values[k];
        }
        for i in hi + 1..n {
            samples[i].values[k] = samples[hi].values[k];
        }
        for w in known.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (va, vb) = (samples[a].values[k], samples[b].values[k]);
            let span = (b - a) as f64;
            for (j, s) in samples[a + 1..b].iter_mut().enumerate() {
                let frac = (j + 1) as f64 / span;
                s.values[k] = va + (vb - va) * frac;
            }
        }
    }

    Ok(SensorSeries {
        device_id: first.device_id.clone(),
        start_time: t0,
        cadence,
        pm_unit: PM_UNIT,
        samples,
    })
}

/// Trailing moving average; the first `window - 1` outputs average the
/// available prefix.
pub fn moving_average(series: &SensorSeries, window: usize) -> Result<SensorSeries> {
    if window == 0 {
        return Err(Error::invalid("moving average window must be at least 1"));
    }
    let mut out = series.clone();
    for (i, sample) in out.samples.iter_mut().enumerate() {
        let from = (i + 1).saturating_sub(window);
        let span = &series.samples[from..=i];
        for k in 0..4 {
            sample.values[k] = span.iter().map(|s| s.values[k]).sum::<f64>() / span.len() as f64;
        }
    }
    Ok(out)
}

fn month_bounds(t: i64) -> (i32, u32, i64, i64) {
    let d = Utc.timestamp_opt(t, 0).single().expect("timestamp in range");
    let (y, m) = (d.year(), d.month());
    let start = NaiveDate::from_ymd_opt(y, m, 1).expect("valid month");
    let next = if m == 12 {
        NaiveDate::from_ymd_opt(y + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(y, m + 1, 1)
    }
    .expect("valid month");
    let ts = |d: NaiveDate| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
    (y, m, ts(start), ts(next))
}

/// Splits each series into calendar months (UTC), drops months whose
/// missing-cell fraction exceeds 70 % and returns the survivors as
/// independent virtual devices named `<device>@<yyyy-mm>`.
///
/// The missing fraction is measured against the full calendar month, so a
/// device that only reported for a few days is sparse even if those days
/// are complete.
pub fn discard_sparse_months(series: Vec<SensorSeries>) -> Vec<SensorSeries> {
    let mut out = Vec::new();
    for s in series {
        if s.is_empty() || s.cadence == 0 {
            continue;
        }
        let cad = s.cadence as i64;
        let mut slot = 0;
        while slot < s.len() {
            let (y, m, m_start, m_end) = month_bounds(s.time_at(slot));
            let mut end = slot;
            while end < s.len() && s.time_at(end) < m_end {
                end += 1;
            }
            // grid points of this series' phase that fall inside the month
            let phase = s.start_time.rem_euclid(cad);
            let first = m_start + (phase - m_start).rem_euclid(cad);
            let expected = ((m_end - first) + cad - 1) / cad;
            let present: usize = s.samples[slot..end]
                .iter()
                .map(|x| x.present.iter().filter(|&&b| b).count())
                .sum();
            let missing = 1.0 - present as f64 / (4 * expected) as f64;
            if missing <= MAX_MISSING_FRACTION {
                out.push(s.slice(slot..end, format!("{}@{:04}-{:02}", s.device_id, y, m)));
            }
            slot = end;
        }
    }
    out
}

/// Full field-data pipeline: group by device, grid, discard sparse months,
/// smooth.
pub fn preprocess(records: &[RawRecord], cadence: u32, window: usize) -> Result<Vec<SensorSeries>> {
    let mut by_device: BTreeMap<&str, Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        by_device.entry(r.device_id.as_str()).or_default().push(r.clone());
    }
    let mut gridded = Vec::with_capacity(by_device.len());
    for recs in by_device.values() {
        gridded.push(resample_and_interpolate(recs, cadence)?);
    }
    discard_sparse_months(gridded)
        .iter()
        .map(|s| moving_average(s, window))
        .collect()
}

/// Parameters of the synthetic device generator.
///
/// Temperature and humidity follow a 24 h sinusoid (humidity in anti-phase)
/// plus white noise. PM10 is a mean-reverting baseline with a Poisson train
/// of exponentially decaying positive bursts; PM2.5 is a fixed fraction of
/// PM10 plus noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_devices: usize,
    /// Seconds.
    pub duration: u64,
    pub cadence: u32,
    /// UTC seconds of the first sample.
    pub start_time: i64,
    pub seed: u64,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub rh_mean: f64,
    pub rh_amplitude: f64,
    pub pm10_baseline: f64,
    /// Fraction of the baseline deviation removed per sample.
    pub pm10_reversion: f64,
    /// Standard deviation of the baseline innovation per sample.
    pub pm10_walk_sd: f64,
    /// Bursts per hour.
    pub burst_rate: f64,
    /// Mean burst height, µg/m³.
    pub burst_magnitude: f64,
    /// Seconds.
    pub burst_decay: f64,
    pub pm25_fraction: f64,
    pub temp_noise_sd: f64,
    pub rh_noise_sd: f64,
    pub pm10_noise_sd: f64,
    pub pm25_noise_sd: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_devices: 10,
            duration: 7 * 86_400,
            cadence: DEFAULT_CADENCE,
            // 2022-12-01 00:00:00 UTC
            start_time: 1_669_852_800,
            seed: 1,
            temp_mean: 18.0,
            temp_amplitude: 5.0,
            rh_mean: 60.0,
            rh_amplitude: 15.0,
            pm10_baseline: 200.0,
            pm10_reversion: 0.002,
            pm10_walk_sd: 1.5,
            burst_rate: 0.25,
            burst_magnitude: 60.0,
            burst_decay: 1800.0,
            pm25_fraction: 0.45,
            temp_noise_sd: 0.05,
            rh_noise_sd: 0.3,
            pm10_noise_sd: 2.0,
            pm25_noise_sd: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("temp_amplitude", self.temp_amplitude),
            ("rh_mean", self.rh_mean),
            ("rh_amplitude", self.rh_amplitude),
            ("pm10_baseline", self.pm10_baseline),
            ("pm10_reversion", self.pm10_reversion),
            ("pm10_walk_sd", self.pm10_walk_sd),
            ("burst_rate", self.burst_rate),
            ("burst_magnitude", self.burst_magnitude),
            ("burst_decay", self.burst_decay),
            ("pm25_fraction", self.pm25_fraction),
            ("temp_noise_sd", self.temp_noise_sd),
            ("rh_noise_sd", self.rh_noise_sd),
            ("pm10_noise_sd", self.pm10_noise_sd),
            ("pm25_noise_sd", self.pm25_noise_sd),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !self.temp_mean.is_finite() {
            return Err(Error::invalid("temp_mean must be finite"));
        }
        if self.pm25_fraction >= 1.0 {
            return Err(Error::invalid("pm25_fraction must be below 1"));
        }
        if self.pm10_reversion > 1.0 {
            return Err(Error::invalid("pm10_reversion must not exceed 1"));
        }
        if self.cadence == 0 {
            return Err(Error::invalid("cadence must be positive"));
        }
        Ok(())
    }
}

/// Generates `n_devices` fully observed series; bit-reproducible per seed.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<SensorSeries>> {
    config.validate()?;
    let n = (config.duration / config.cadence as u64) as usize;
    let dt = config.cadence as f64;
    let day = 86_400.0;
    let normal = |sd: f64| Normal::new(0.0, sd).expect("validated sd");
    let (n_temp, n_rh, n_pm10, n_pm25, n_walk) = (
        normal(config.temp_noise_sd),
        normal(config.rh_noise_sd),
        normal(config.pm10_noise_sd),
        normal(config.pm25_noise_sd),
        normal(config.pm10_walk_sd),
    );
    let burst_p = config.burst_rate * dt / 3600.0;
    let burst_height = (config.burst_magnitude > 0.0).then(|| Exp::new(1.0 / config.burst_magnitude).expect("positive"));
    let decay = if config.burst_decay > 0.0 { (-dt / config.burst_decay).exp() } else { 0.0 };

    let series = (0..config.n_devices)
        .map(|dev| {
            let mut rng = crate::seeded_rng(config.seed, dev as u64);
            let phase = rng.random_range(-0.5..0.5);
            let mut baseline = config.pm10_baseline;
            let mut burst = 0.0;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let t = config.start_time as f64 + i as f64 * dt;
                // peak mid-afternoon
                let angle = 2.0 * std::f64::consts::PI * (t.rem_euclid(day) / day - 0.375) + phase;
                let temp = config.temp_mean + config.temp_amplitude * angle.sin() + n_temp.sample(&mut rng);
                let rh = (config.rh_mean - config.rh_amplitude * angle.sin() + n_rh.sample(&mut rng)).clamp(0.0, 100.0);

                baseline += config.pm10_reversion * (config.pm10_baseline - baseline) + n_walk.sample(&mut rng);
                baseline = baseline.max(0.0);
                burst *= decay;
                if let Some(h) = &burst_height {
                    if rng.random::<f64>() < burst_p {
                        burst += h.sample(&mut rng);
                    }
                }
                let pm10 = (baseline + burst + n_pm10.sample(&mut rng)).max(0.0);
                let pm25 = (config.pm25_fraction * pm10 + n_pm25.sample(&mut rng)).max(0.0);
                rows.push([temp, rh, pm25, pm10]);
            }
            SensorSeries::from_rows(format!("syn{dev:03}"), config.start_time, config.cadence, &rows)
        })
        .collect();
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "device_id,created_at,PM10,PM2.5,RH,Temp\n";

    fn rec(t: i64, v: Option<f64>) -> RawRecord {
        RawRecord { device_id: "d".into(), created_at: t, pm10: v, pm25: v, rh: v, temp: v }
    }

    #[test]
    fn parses_documented_row() {
        let csv = format!("{HEADER}d01,2022-12-01 00:00:30 +0530,180.0,95.0,60.0,18.5\n");
        let got = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(got.records.len(), 1);
        let r = &got.records[0];
        assert_eq!(r.device_id, "d01");
        assert_eq!(r.pm10, Some(180.0));
        assert_eq!(r.pm25, Some(95.0));
        assert_eq!(r.rh, Some(60.0));
        assert_eq!(r.temp, Some(18.5));
        // 2022-11-30 18:30:30 UTC
        assert_eq!(r.created_at, 1_669_833_030);
    }

    #[test]
    fn header_only_is_empty() {
        let got = read_csv(HEADER.as_bytes()).unwrap();
        assert!(got.records.is_empty());
        assert!(got.rejected.is_empty());
    }

    #[test]
    fn blank_cell_is_absent() {
        let csv = format!(
            "{HEADER}a,2022-12-01 00:00:00 +0000,100,40,50,20\n\
             a,2022-12-01 00:00:30 +0000,101,,51,20.1\n\
             a,2022-12-01 00:01:00 +0000,102,42,,\n"
        );
        let got = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(got.records.len(), 3);
        assert_eq!(got.records[1].pm25, None);
        assert_eq!(got.records[1].pm10, Some(101.0));
        assert_eq!(got.records[2].rh, None);
        assert_eq!(got.records[2].temp, None);
    }

    #[test]
    fn bad_timestamp_reports_line() {
        let csv = format!("{HEADER}a,2022-12-01 00:00:00 +0000,1,1,1,1\na,2022/12/01 00:00,1,1,1,1\n");
        match read_csv(csv.as_bytes()) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_values_are_counted() {
        let csv = format!(
            "{HEADER}a,2022-12-01 00:00:00 +0000,abc,1,1,1\n\
             a,2022-12-01 00:00:30 +0000,-3,1,1,1\n\
             a,2022-12-01 00:01:00 +0000,1,1,120,1\n\
             a,2022-12-01 00:01:30 +0000,1,1,1\n\
             a,2022-12-01 00:02:00 +0000,1,1,1,1\n"
        );
        let got = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(got.records.len(), 1);
        let lines: Vec<u64> = got.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn wrong_header_and_missing_file() {
        assert!(matches!(read_csv("a,b,c\n".as_bytes()), Err(Error::Header { .. })));
        assert!(matches!(ingest_csv("/nonexistent/file.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_roundtrip_through_writer() {
        let s = SensorSeries::from_rows("x", 1_669_852_800, 30, &[[18.0, 60.0, 40.0, 90.0], [18.5, 61.0, 41.0, 91.0]]);
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&s), &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let grid = resample_and_interpolate(&back.records, 30).unwrap();
        assert_eq!(grid, s);
    }

    #[test]
    fn midpoint_fill() {
        let recs = [rec(30, Some(10.0)), rec(60, None), rec(90, Some(20.0))];
        let s = resample_and_interpolate(&recs, 30).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.samples[1].values[0], 15.0);
        assert!(!s.samples[1].present[0]);
    }

    #[test]
    fn quarter_interpolants() {
        // only t=0 and t=120 observed; t=30..90 absent entirely
        let recs = [rec(0, Some(0.0)), rec(120, Some(8.0))];
        let s = resample_and_interpolate(&recs, 30).unwrap();
        assert_eq!(s.column(Param::Pm10), vec![0.0, 2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn full_grid_is_identity() {
        let recs: Vec<_> = (0..6).map(|i| rec(i * 30, Some(i as f64 * 1.7 - 3.0))).collect();
        let s = resample_and_interpolate(&recs, 30).unwrap();
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(s.samples[i].values[3], r.pm10.unwrap());
            assert!(s.samples[i].present.iter().all(|&b| b));
        }
    }

    #[test]
    fn edge_gaps_extend_nearest() {
        let recs = [rec(0, None), rec(30, Some(5.0)), rec(60, Some(7.0)), rec(90, None)];
        let s = resample_and_interpolate(&recs, 30).unwrap();
        assert_eq!(s.column(Param::Temp), vec![5.0, 5.0, 7.0, 7.0]);
    }

    #[test]
    fn resample_errors() {
        assert!(matches!(resample_and_interpolate(&[], 30), Err(Error::Empty)));
        let mut other = rec(30, Some(1.0));
        other.device_id = "e".into();
        assert!(matches!(resample_and_interpolate(&[rec(0, Some(1.0)), other], 30), Err(Error::MixedDevices(..))));
        let mut r = rec(0, Some(1.0));
        r.pm25 = None;
        assert!(matches!(resample_and_interpolate(&[r], 30), Err(Error::NoPresentValues("pm25"))));
    }

    fn scalar(values: &[f64]) -> SensorSeries {
        let rows: Vec<_> = values.iter().map(|&v| [v; 4]).collect();
        SensorSeries::from_rows("m", 0, 30, &rows)
    }

    #[test]
    fn trailing_mean() {
        let out = moving_average(&scalar(&[1.0, 2.0, 3.0, 4.0, 5.0]), 5).unwrap();
        let col = out.column(Param::Pm25);
        assert_eq!(col[4], 3.0);
        assert_eq!(col[1], 1.5);
        assert_eq!(col[0], 1.0);
        assert_eq!(out.start_time, 0);
    }

    #[test]
    fn window_one_and_zero() {
        let s = scalar(&[0.1, 0.7, -2.3, 9.9]);
        assert_eq!(moving_average(&s, 1).unwrap(), s);
        assert!(moving_average(&s, 0).is_err());
    }

    fn month_series(start: i64, slots: usize, present_slots: usize) -> SensorSeries {
        let mut s = SensorSeries::from_rows("dev", start, 30, &vec![[1.0; 4]; slots]);
        for sample in &mut s.samples[present_slots..] {
            sample.present = [false; 4];
        }
        s
    }

    // November 2022: 30 days, 86_400 slots at 30 s
    const NOV_2022: i64 = 1_667_260_800;
    const NOV_SLOTS: usize = 86_400;

    #[test]
    fn sparse_month_boundaries() {
        let keep_all = discard_sparse_months(vec![month_series(NOV_2022, NOV_SLOTS, NOV_SLOTS)]);
        assert_eq!(keep_all.len(), 1);
        assert_eq!(keep_all[0].device_id, "dev@2022-11");

        // exactly 70 % missing is kept
        let exact = discard_sparse_months(vec![month_series(NOV_2022, NOV_SLOTS, NOV_SLOTS * 3 / 10)]);
        assert_eq!(exact.len(), 1);

        // 75 % missing is dropped
        let dropped = discard_sparse_months(vec![month_series(NOV_2022, NOV_SLOTS, NOV_SLOTS / 4)]);
        assert!(dropped.is_empty());
    }

    #[test]
    fn months_split_into_virtual_devices() {
        // last 10 days of November fully observed, all of December observed
        let start = NOV_2022 + 20 * 86_400;
        let s = month_series(start, (10 + 31) * 2880, (10 + 31) * 2880);
        let out = discard_sparse_months(vec![s]);
        // November is one third covered (66.7 % missing) and survives
        assert_eq!(out.iter().map(|s| s.device_id.as_str()).collect::<Vec<_>>(), ["dev@2022-11", "dev@2022-12"]);
        assert_eq!(out[1].len(), 31 * 2880);
        assert_eq!(out[1].start_time, 1_669_852_800);

        // a 5-day fragment is too sparse
        let frag = month_series(NOV_2022, 5 * 2880, 5 * 2880);
        assert!(discard_sparse_months(vec![frag]).is_empty());
    }

    #[test]
    fn preprocess_groups_devices() {
        let mut recs = Vec::new();
        for dev in ["b", "a"] {
            for i in 0..(NOV_SLOTS as i64) {
                recs.push(RawRecord {
                    device_id: dev.into(),
                    created_at: NOV_2022 + i * 30,
                    pm10: Some(i as f64 % 7.0),
                    pm25: Some(1.0),
                    rh: Some(50.0),
                    temp: Some(20.0),
                });
            }
        }
        let out = preprocess(&recs, 30, 5).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].device_id, "a@2022-11");
        assert_eq!(out[0].samples[4].values[3], 2.0);
    }

    #[test]
    fn degenerate_synthetic_is_sinusoid() {
        let cfg = SyntheticConfig {
            n_devices: 2,
            duration: 86_400,
            pm10_walk_sd: 0.0,
            burst_rate: 0.0,
            temp_noise_sd: 0.0,
            rh_noise_sd: 0.0,
            pm10_noise_sd: 0.0,
            pm25_noise_sd: 0.0,
            ..Default::default()
        };
        let out = generate_synthetic(&cfg).unwrap();
        assert_eq!(out.len(), 2);
        for s in &out {
            assert_eq!(s.len(), 2880);
            let temp = s.column(Param::Temp);
            // fit phase from the first two samples and check every point
            let amp = cfg.temp_amplitude;
            let w = 2.0 * std::f64::consts::PI * 30.0 / 86_400.0;
            let phi = ((temp[0] - cfg.temp_mean) / amp).asin();
            let dir = if temp[1] >= temp[0] { 1.0 } else { -1.0 };
            let phi = if dir * phi.cos() >= 0.0 { phi } else { std::f64::consts::PI - phi };
            for (i, t) in temp.iter().enumerate() {
                let want = cfg.temp_mean + amp * (phi + w * i as f64).sin();
                assert!((t - want).abs() < 1e-9, "slot {i}: {t} vs {want}");
            }
            for x in &s.samples {
                assert!((x.get(Param::Pm25) / x.get(Param::Pm10) - cfg.pm25_fraction).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_is_reproducible_and_valid() {
        let cfg = SyntheticConfig { n_devices: 3, duration: 2 * 86_400, ..Default::default() };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a, c);
        for s in &a {
            for w in 1..s.len() {
                assert_eq!(s.time_at(w) - s.time_at(w - 1), 30);
            }
            assert!(s.samples.iter().all(|x| x.get(Param::Pm10) >= 0.0 && x.get(Param::Pm25) >= 0.0));
        }
    }

    #[test]
    fn config_validation() {
        assert!(SyntheticConfig { pm25_fraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(SyntheticConfig { rh_noise_sd: -1.0, ..Default::default() }.validate().is_err());
        assert!(SyntheticConfig { burst_rate: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(SyntheticConfig::default().validate().is_ok());
    }
}
