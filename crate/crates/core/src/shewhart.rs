//! Shewhart (send-on-delta) transmission reduction.
//!
//! A detector transmits a sample when it deviates from the last transmitted
//! value by strictly more than its threshold; the very first sample is
//! always sent so the server can bootstrap. The server holds the last
//! received value between transmissions, so every tracked quantity is known
//! to within its threshold at every slot.
//!
//! Four modes are supported:
//!
//! | mode | node side | payload | server side |
//! |------|-----------|---------|-------------|
//! | M0 | send every sample | 200 B | exact |
//! | M1 | one detector per parameter, send all four if any fires, reset all | 200 B | hold all four |
//! | M2 | detector on PM10, send PM10 | 50 B | hold PM10, predict PM2.5 |
//! | M3 | detector on node-computed AQI, send PM10 | 50 B | hold PM10, predict PM2.5 |
//!
//! In M2 and M3 the server recomputes the AQI from held PM10 and predicted
//! PM2.5. For M3 the threshold bounds the *node* AQI error; the server AQI
//! additionally carries the predictor error and is not bounded by τ.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::airquality::BreakpointTable;
use crate::mlpredict::Predictor;
use crate::timeseries::{Param, SensorSeries};
use crate::{Error, Result};

pub const FULL_PAYLOAD: u32 = 200;
pub const REDUCED_PAYLOAD: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Threshold {
    pub temp: f64,
    pub rh: f64,
    pub pm25: f64,
    pub pm10: f64,
    pub aqi: f64,
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold { temp: 0.5, rh: 5.0, pm25: 5.0, pm10: 5.0, aqi: 15.0 }
    }
}

impl Threshold {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("temp", self.temp), ("rh", self.rh), ("pm25", self.pm25), ("pm10", self.pm10), ("aqi", self.aqi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("threshold {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Temp => self.temp,
            Param::Rh => self.rh,
            Param::Pm25 => self.pm25,
            Param::Pm10 => self.pm10,
        }
    }

    /// Every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Threshold {
        Threshold {
            temp: self.temp * factor,
            rh: self.rh * factor,
            pm25: self.pm25 * factor,
            pm10: self.pm10 * factor,
            aqi: self.aqi * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorState {
    pub last_transmitted: f64,
    pub threshold: f64,
    pub initialized: bool,
}

impl DetectorState {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::invalid(format!("detector threshold must be positive, got {threshold}")));
        }
        Ok(DetectorState { last_transmitted: f64::NAN, threshold, initialized: false })
    }

    /// Would `x` trigger a transmission? Does not update the state.
    pub fn triggers(&self, x: f64) -> Result<bool> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        Ok(!self.initialized || (x - self.last_transmitted).abs() > self.threshold)
    }

    pub fn mark_sent(&mut self, x: f64) {
        self.last_transmitted = x;
        self.initialized = true;
    }

    /// Feeds one sample; returns whether it is transmitted.
    pub fn observe(&mut self, x: f64) -> Result<bool> {
        let fire = self.triggers(x)?;
        if fire {
            self.mark_sent(x);
        }
        Ok(fire)
    }
}

/// Functional form of [`DetectorState::observe`].
pub fn detect(state: DetectorState, x: f64) -> Result<(bool, DetectorState)> {
    let mut s = state;
    let fire = s.observe(x)?;
    Ok((fire, s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    M0,
    M1,
    M2,
    M3,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::M0, Mode::M1, Mode::M2, Mode::M3];

    pub fn name(self) -> &'static str {
        match self {
            Mode::M0 => "M0",
            Mode::M1 => "M1",
            Mode::M2 => "M2",
            Mode::M3 => "M3",
        }
    }

    pub fn payload_bytes(self) -> u32 {
        match self {
            Mode::M0 | Mode::M1 => FULL_PAYLOAD,
            Mode::M2 | Mode::M3 => REDUCED_PAYLOAD,
        }
    }

    pub fn needs_predictor(self) -> bool {
        matches!(self, Mode::M2 | Mode::M3)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M0" | "0" => Ok(Mode::M0),
            "M1" | "1" => Ok(Mode::M1),
            "M2" | "2" => Ok(Mode::M2),
            "M3" | "3" => Ok(Mode::M3),
            _ => Err(Error::invalid(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub slot: usize,
    /// Transmitted values indexed by [`Param::index`].
    pub values: [Option<f64>; 4],
    /// Node-side AQI that triggered the event (M3 only).
    pub aqi: Option<f64>,
    pub payload_bytes: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionLog {
    pub device_id: String,
    pub mode: Mode,
    pub cadence: u32,
    pub total_slots: usize,
    pub events: Vec<Event>,
}

impl TransmissionLog {
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.events.iter().map(|e| e.slot)
    }

    pub fn bytes_sent(&self) -> u64 {
        self.events.iter().map(|e| e.payload_bytes as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructedSeries {
    pub device_id: String,
    pub start_time: i64,
    pub cadence: u32,
    /// `None` for parameters the server neither receives nor predicts.
    pub values: [Option<Vec<f64>>; 4],
    /// Server-side AQI per slot.
    pub aqi: Vec<f64>,
}

impl ReconstructedSeries {
    pub fn len(&self) -> usize {
        self.aqi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aqi.is_empty()
    }

    pub fn get(&self, p: Param) -> Option<&[f64]> {
        self.values[p.index()].as_deref()
    }
}

/// Runs one transmission mode over a preprocessed series.
pub fn run_mode(
    series: &SensorSeries,
    mode: Mode,
    thresholds: &Threshold,
    predictor: Option<&dyn Predictor>,
    table: &BreakpointTable,
) -> Result<(TransmissionLog, ReconstructedSeries)> {
    thresholds.validate()?;
    let predictor = match (mode.needs_predictor(), predictor) {
        (true, None) => return Err(Error::MissingPredictor(mode.name())),
        (_, p) => p,
    };
    let n = series.len();
    let mut events = Vec::new();
    let mut held = [f64::NAN; 4];
    let mut out: [Vec<f64>; 4] = Default::default();
    let mut aqi = Vec::with_capacity(n);

    let mut detectors = [
        DetectorState::new(thresholds.temp)?,
        DetectorState::new(thresholds.rh)?,
        DetectorState::new(thresholds.pm25)?,
        DetectorState::new(thresholds.pm10)?,
    ];
    let mut aqi_detector = DetectorState::new(thresholds.aqi)?;
    let pm10 = Param::Pm10.index();

    for (slot, sample) in series.samples.iter().enumerate() {
        let v = sample.values;
        match mode {
            Mode::M0 => {
                events.push(full_event(slot, v));
                held = v;
            }
            Mode::M1 => {
                let mut fire = false;
                for (d, &x) in detectors.iter().zip(&v) {
                    fire |= d.triggers(x)?;
                }
                if fire {
                    for (d, &x) in detectors.iter_mut().zip(&v) {
                        d.mark_sent(x);
                    }
                    events.push(full_event(slot, v));
                    held = v;
                }
            }
            Mode::M2 => {
                if detectors[pm10].observe(v[pm10])? {
                    events.push(pm10_event(slot, v[pm10], None));
                    held[pm10] = v[pm10];
                }
            }
            Mode::M3 => {
                let node_aqi = table.aqi(v[Param::Pm25.index()], v[pm10])?.aqi;
                if aqi_detector.observe(node_aqi)? {
                    events.push(pm10_event(slot, v[pm10], Some(node_aqi)));
                    held[pm10] = v[pm10];
                }
            }
        }

        let pm25 = match predictor {
            Some(p) if mode.needs_predictor() => p.predict(held[pm10]).max(0.0),
            _ => held[Param::Pm25.index()],
        };
        if mode.needs_predictor() {
            out[pm10].push(held[pm10]);
            out[Param::Pm25.index()].push(pm25);
        } else {
            for k in 0..4 {
                out[k].push(held[k]);
            }
        }
        aqi.push(table.aqi(pm25, held[pm10])?.aqi);
    }

    let pm25_idx = Param::Pm25.index();
    let mut k = 0;
    let values = out.map(|col| {
        let kept = !mode.needs_predictor() || k == pm10 || k == pm25_idx;
        k += 1;
        kept.then_some(col)
    });

    Ok((
        TransmissionLog {
            device_id: series.device_id.clone(),
            mode,
            cadence: series.cadence,
            total_slots: n,
            events,
        },
        ReconstructedSeries {
            device_id: series.device_id.clone(),
            start_time: series.start_time,
            cadence: series.cadence,
            values,
            aqi,
        },
    ))
}

fn full_event(slot: usize, v: [f64; 4]) -> Event {
    Event { slot, values: v.map(Some), aqi: None, payload_bytes: FULL_PAYLOAD }
}

fn pm10_event(slot: usize, pm10: f64, aqi: Option<f64>) -> Event {
    let mut values = [None; 4];
    values[Param::Pm10.index()] = Some(pm10);
    Event { slot, values, aqi, payload_bytes: REDUCED_PAYLOAD }
}

pub fn reduction_pct(log: &TransmissionLog) -> Result<f64> {
    if log.total_slots == 0 {
        return Err(Error::invalid("log covers zero slots"));
    }
    Ok(100.0 * (1.0 - log.events.len() as f64 / log.total_slots as f64))
}

fn check_grid(truth: &SensorSeries, rec: &ReconstructedSeries) -> Result<()> {
    if truth.len() != rec.len() || truth.start_time != rec.start_time || truth.cadence != rec.cadence {
        return Err(Error::GridMismatch(format!(
            "truth has {} slots from {} every {} s, reconstruction {} slots from {} every {} s",
            truth.len(),
            truth.start_time,
            truth.cadence,
            rec.len(),
            rec.start_time,
            rec.cadence
        )));
    }
    Ok(())
}

fn rmse(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in a.zip(b) {
        sum += (x - y).powi(2);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

pub fn server_rmse(truth: &SensorSeries, rec: &ReconstructedSeries, param: Param) -> Result<f64> {
    check_grid(truth, rec)?;
    let got = rec.get(param).ok_or(Error::NotReconstructed(param.name()))?;
    Ok(rmse(truth.samples.iter().map(|s| s.get(param)), got.iter().copied()))
}

/// RMSE between the AQI computed from the true series and the server AQI.
pub fn server_aqi_rmse(truth: &SensorSeries, rec: &ReconstructedSeries, table: &BreakpointTable) -> Result<f64> {
    check_grid(truth, rec)?;
    let true_aqi = truth
        .samples
        .iter()
        .map(|s| table.aqi(s.get(Param::Pm25), s.get(Param::Pm10)).map(|r| r.aqi))
        .collect::<Result<Vec<_>>>()?;
    Ok(rmse(true_aqi.into_iter(), rec.aqi.iter().copied()))
}

/// Mean number of devices transmitting per sensing slot.
///
/// Slot indices are compared directly, i.e. every log is placed on a common
/// grid starting at its own slot 0; the grid length is the longest log.
pub fn simultaneous_transmitters(logs: &[TransmissionLog]) -> Result<f64> {
    let slots = logs.iter().map(|l| l.total_slots).max().ok_or(Error::Empty)?;
    if slots == 0 {
        return Err(Error::invalid("logs cover zero slots"));
    }
    let events: usize = logs.iter().map(|l| l.events.len()).sum();
    Ok(events as f64 / slots as f64)
}

pub const LOG_HEADER: [&str; 11] =
    ["device_id", "mode", "cadence", "total_slots", "slot", "temp", "rh", "pm25", "pm10", "aqi", "payload_bytes"];

/// Writes logs as one row per event.
pub fn write_logs<W: Write>(logs: &[TransmissionLog], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LOG_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for log in logs {
        for e in &log.events {
            w.write_record([
                log.device_id.clone(),
                log.mode.name().to_owned(),
                log.cadence.to_string(),
                log.total_slots.to_string(),
                e.slot.to_string(),
                opt(e.values[0]),
                opt(e.values[1]),
                opt(e.values[2]),
                opt(e.values[3]),
                opt(e.aqi),
                e.payload_bytes.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_logs<R: Read>(reader: R) -> Result<Vec<TransmissionLog>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.iter().map(String::as_str).ne(LOG_HEADER.iter().copied()) {
        return Err(Error::Header { found: header, expected: LOG_HEADER.iter().map(|s| s.to_string()).collect() });
    }
    let mut logs: Vec<TransmissionLog> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |m: &str| Error::Row { line, message: m.to_owned() };
        let int = |i: usize| row[i].parse::<u64>().map_err(|_| err(&format!("bad integer in {}", LOG_HEADER[i])));
        let opt = |i: usize| -> Result<Option<f64>> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                row[i].parse().map(Some).map_err(|_| err(&format!("bad number in {}", LOG_HEADER[i])))
            }
        };
        let mode: Mode = row[1].parse()?;
        let event = Event {
            slot: int(4)? as usize,
            values: [opt(5)?, opt(6)?, opt(7)?, opt(8)?],
            aqi: opt(9)?,
            payload_bytes: int(10)? as u32,
        };
        let same = logs.last().is_some_and(|l| l.device_id == row[0] && l.mode == mode);
        if !same {
            logs.push(TransmissionLog {
                device_id: row[0].to_owned(),
                mode,
                cadence: int(2)? as u32,
                total_slots: int(3)? as usize,
                events: Vec::new(),
            });
        }
        let log = logs.last_mut().expect("just pushed");
        if log.events.last().is_some_and(|e| e.slot >= event.slot) || event.slot >= log.total_slots {
            return Err(err("slot indices must increase and stay below total_slots"));
        }
        log.events.push(event);
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlpredict::LinearModel;

    fn run_detector(xs: &[f64], tau: f64) -> Vec<usize> {
        let mut d = DetectorState::new(tau).unwrap();
        xs.iter().enumerate().filter_map(|(i, &x)| d.observe(x).unwrap().then_some(i)).collect()
    }

    #[test]
    fn detector_examples() {
        assert_eq!(run_detector(&[5.0; 6], 1.0), vec![0]);
        assert_eq!(run_detector(&[0.0, 0.4, 0.9, 1.6], 1.0), vec![0, 3]);
        // exactly τ away is not a change
        assert_eq!(run_detector(&[0.0, 1.0, 2.0], 1.0), vec![0, 2]);
        assert_eq!(run_detector(&[0.0, -1.0], 1.0), vec![0]);
    }

    #[test]
    fn detector_errors_and_functional_form() {
        assert!(DetectorState::new(0.0).is_err());
        let s = DetectorState::new(1.0).unwrap();
        assert!(matches!(detect(s, f64::NAN), Err(Error::NonFinite(_))));
        let (fire, s) = detect(s, 3.0).unwrap();
        assert!(fire && s.initialized && s.last_transmitted == 3.0);
        let (fire, s2) = detect(s, 3.5).unwrap();
        assert!(!fire && s2 == s);
    }

    fn constant_series(n: usize) -> SensorSeries {
        SensorSeries::from_rows("c", 0, 30, &vec![[18.0, 60.0, 40.0, 90.0]; n])
    }

    #[test]
    fn m0_sends_everything() {
        let s = constant_series(12);
        let (log, rec) = run_mode(&s, Mode::M0, &Threshold::default(), None, &BreakpointTable::cpcb()).unwrap();
        assert_eq!(log.events.len(), 12);
        assert_eq!(reduction_pct(&log).unwrap(), 0.0);
        for p in Param::ALL {
            assert_eq!(server_rmse(&s, &rec, p).unwrap(), 0.0);
        }
        assert!(log.events.iter().all(|e| e.payload_bytes == 200));
    }

    #[test]
    fn m1_constant_sends_once() {
        let s = constant_series(40);
        let (log, _) = run_mode(&s, Mode::M1, &Threshold::default(), None, &BreakpointTable::cpcb()).unwrap();
        assert_eq!(log.events.len(), 1);
        assert!((reduction_pct(&log).unwrap() - 100.0 * (1.0 - 1.0 / 40.0)).abs() < 1e-12);
    }

    #[test]
    fn m1_resets_all_references() {
        // temp jumps at slot 1 → all four resent; pm10 drifts 3 + 3 which
        // would cross τ=5 against the original reference but not the reset one
        let rows = [[18.0, 60.0, 40.0, 90.0], [19.0, 60.0, 40.0, 93.0], [19.0, 60.0, 40.0, 96.0]];
        let s = SensorSeries::from_rows("r", 0, 30, &rows);
        let (log, rec) = run_mode(&s, Mode::M1, &Threshold::default(), None, &BreakpointTable::cpcb()).unwrap();
        assert_eq!(log.slots().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(rec.get(Param::Pm10).unwrap(), &[90.0, 93.0, 93.0]);
    }

    #[test]
    fn m2_m3_need_predictor() {
        let s = constant_series(3);
        for mode in [Mode::M2, Mode::M3] {
            let r = run_mode(&s, mode, &Threshold::default(), None, &BreakpointTable::cpcb());
            assert!(matches!(r, Err(Error::MissingPredictor(_))));
        }
    }

    #[test]
    fn m2_reconstruction_uses_predictor() {
        let rows: Vec<[f64; 4]> = [90.0, 92.0, 97.0, 97.5].iter().map(|&p| [18.0, 60.0, 0.4 * p, p]).collect();
        let s = SensorSeries::from_rows("p", 0, 30, &rows);
        let model = LinearModel { slope: 0.5, intercept: 0.0 };
        let (log, rec) = run_mode(&s, Mode::M2, &Threshold::default(), Some(&model), &BreakpointTable::cpcb()).unwrap();
        assert_eq!(log.slots().collect::<Vec<_>>(), vec![0, 2]);
        assert!(log.events.iter().all(|e| e.payload_bytes == 50 && e.values[2].is_none()));
        assert_eq!(rec.get(Param::Pm10).unwrap(), &[90.0, 90.0, 97.0, 97.0]);
        assert_eq!(rec.get(Param::Pm25).unwrap(), &[45.0, 45.0, 48.5, 48.5]);
        assert!(rec.get(Param::Temp).is_none());
        assert!(matches!(server_rmse(&s, &rec, Param::Rh), Err(Error::NotReconstructed("rh"))));
    }

    #[test]
    fn m3_single_band_sends_once() {
        // pm10 wanders 110..140 inside the 100-250 band (index slope 2/3 → ≤ 20·2/3 from start);
        // pm25 stays at 20 (index 33.3), so AQI is the pm10 index and moves at most 13.3 < 15
        let pm10 = [120.0, 110.0, 125.0, 140.0, 130.0, 115.0, 121.0];
        let rows: Vec<[f64; 4]> = pm10.iter().map(|&p| [18.0, 60.0, 20.0, p]).collect();
        let s = SensorSeries::from_rows("b", 0, 30, &rows);
        let table = BreakpointTable::cpcb();
        // hand AQI trace: 100 + (p-100)*100/150
        let trace: Vec<f64> = pm10.iter().map(|p| 100.0 + (p - 100.0) * 100.0 / 150.0).collect();
        assert!(trace.iter().all(|a| (a - trace[0]).abs() <= 15.0));
        let model = LinearModel { slope: 0.0, intercept: 20.0 };
        let (log, _) = run_mode(&s, Mode::M3, &Threshold::default(), Some(&model), &table).unwrap();
        assert_eq!(log.events.len(), 1);
        assert!((log.events[0].aqi.unwrap() - trace[0]).abs() < 1e-12);
    }

    #[test]
    fn rmse_cases() {
        let s = SensorSeries::from_rows("e", 0, 30, &[[0.0; 4], [0.0; 4]]);
        let mut rec = ReconstructedSeries {
            device_id: "e".into(),
            start_time: 0,
            cadence: 30,
            values: [Some(vec![3.0, 4.0]), Some(vec![2.0, 2.0]), Some(vec![0.0, 0.0]), None],
            aqi: vec![0.0, 0.0],
        };
        assert!((server_rmse(&s, &rec, Param::Temp).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(server_rmse(&s, &rec, Param::Rh).unwrap(), 2.0);
        assert_eq!(server_rmse(&s, &rec, Param::Pm25).unwrap(), 0.0);
        rec.start_time = 30;
        assert!(matches!(server_rmse(&s, &rec, Param::Temp), Err(Error::GridMismatch(_))));
    }

    fn log_with(slots: &[usize], total: usize) -> TransmissionLog {
        TransmissionLog {
            device_id: format!("d{}", slots.first().copied().unwrap_or(0)),
            mode: Mode::M1,
            cadence: 30,
            total_slots: total,
            events: slots
                .iter()
                .map(|&slot| Event { slot, values: [Some(1.0); 4], aqi: None, payload_bytes: 200 })
                .collect(),
        }
    }

    #[test]
    fn reduction_arithmetic() {
        assert_eq!(reduction_pct(&log_with(&(0..10).collect::<Vec<_>>(), 100)).unwrap(), 90.0);
        let r = reduction_pct(&log_with(&[0, 1, 2, 3], 116)).unwrap();
        assert!((r - 96.551724).abs() < 1e-5);
        assert!(reduction_pct(&log_with(&[], 0)).is_err());
    }

    #[test]
    fn simultaneity() {
        let one = log_with(&[5], 50);
        assert_eq!(simultaneous_transmitters(&[one]).unwrap(), 1.0 / 50.0);
        let logs = [log_with(&[0], 3), log_with(&[1], 3), log_with(&[2], 3)];
        assert_eq!(simultaneous_transmitters(&logs).unwrap(), 1.0);
        assert!(simultaneous_transmitters(&[]).is_err());

        let s = constant_series(20);
        let logs: Vec<_> = (0..230)
            .map(|_| run_mode(&s, Mode::M0, &Threshold::default(), None, &BreakpointTable::cpcb()).unwrap().0)
            .collect();
        assert_eq!(simultaneous_transmitters(&logs).unwrap(), 230.0);
    }

    #[test]
    fn log_file_roundtrip() {
        let rows: Vec<[f64; 4]> = (0..30).map(|i| [18.0 + i as f64 * 0.1, 60.0, 40.0, 90.0 + (i * i % 17) as f64]).collect();
        let s = SensorSeries::from_rows("io", 0, 30, &rows);
        let model = LinearModel { slope: 0.45, intercept: 0.0 };
        let table = BreakpointTable::cpcb();
        let logs: Vec<_> = Mode::ALL
            .iter()
            .map(|&m| run_mode(&s, m, &Threshold::default(), Some(&model), &table).unwrap().0)
            .collect();
        let mut buf = Vec::new();
        write_logs(&logs, &mut buf).unwrap();
        assert_eq!(read_logs(buf.as_slice()).unwrap(), logs);

        let bad = "device_id,mode,cadence,total_slots,slot,temp,rh,pm25,pm10,aqi,payload_bytes\nd,M1,30,5,3,,,,1,,50\nd,M1,30,5,2,,,,1,,50\n";
        assert!(read_logs(bad.as_bytes()).is_err());
    }
}
