//! CPCB piecewise-linear sub-indices and AQI for PM2.5 and PM10.
//!
//! The index bands are not hard-coded; they come from a plain-text table
//! (see `data/cpcb_breakpoints.txt`) with one band per line:
//!
//! ```text
//! # pollutant  B_LO  B_HI  I_LO  I_HI
//! pm10    0    50     0    50
//! ```
//!
//! Blank lines and `#` comments are ignored; an optional `version <n>` line
//! tags the table. Concentrations above the top band clamp to index 500.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_INDEX: f64 = 500.0;

const CPCB_TABLE: &str = include_str!("../data/cpcb_breakpoints.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pollutant {
    Pm25,
    Pm10,
}

impl Pollutant {
    pub fn name(self) -> &'static str {
        match self {
            Pollutant::Pm25 => "pm25",
            Pollutant::Pm10 => "pm10",
        }
    }
}

impl FromStr for Pollutant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pm25" | "pm2.5" => Ok(Pollutant::Pm25),
            "pm10" => Ok(Pollutant::Pm10),
            _ => Err(Error::UnknownPollutant(s.to_owned())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub b_lo: f64,
    pub b_hi: f64,
    pub i_lo: f64,
    pub i_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BreakpointTable {
    pub version: u32,
    bands: BTreeMap<Pollutant, Vec<Band>>,
}

impl Default for BreakpointTable {
    fn default() -> Self {
        Self::cpcb()
    }
}

impl BreakpointTable {
    /// The bundled CPCB table.
    pub fn cpcb() -> Self {
        Self::parse(CPCB_TABLE).expect("bundled breakpoint table is valid")
    }

    pub fn bands(&self, pollutant: Pollutant) -> Option<&[Band]> {
        self.bands.get(&pollutant).map(Vec::as_slice)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = 0;
        let mut bands: BTreeMap<Pollutant, Vec<Band>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Breakpoints { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields[0] == "version" {
                version = fields
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("bad version line".into()))?;
                continue;
            }
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let pollutant: Pollutant = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
            let mut nums = [0.0; 4];
            for (n, f) in nums.iter_mut().zip(&fields[1..]) {
                *n = f.parse().map_err(|_| err(format!("{f:?} is not a number")))?;
            }
            let [b_lo, b_hi, i_lo, i_hi] = nums;
            if !(b_lo < b_hi) || !(i_lo <= i_hi) {
                return Err(err("band needs B_LO < B_HI and I_LO <= I_HI".into()));
            }
            let list = bands.entry(pollutant).or_default();
            if let Some(prev) = list.last() {
                if prev.b_hi != b_lo || prev.i_hi != i_lo {
                    return Err(err(format!("band does not continue the previous {} band", pollutant.name())));
                }
            }
            list.push(Band { b_lo, b_hi, i_lo, i_hi });
        }
        if bands.is_empty() {
            return Err(Error::Breakpoints { line: 0, message: "no bands".into() });
        }
        Ok(BreakpointTable { version, bands })
    }

    /// Renders the table in the same text format [`parse`](Self::parse) reads.
    pub fn to_text(&self) -> String {
        let mut out = format!("version {}\n", self.version);
        for (p, list) in &self.bands {
            for b in list {
                out.push_str(&format!("{} {} {} {} {}\n", p.name(), b.b_lo, b.b_hi, b.i_lo, b.i_hi));
            }
        }
        out
    }

    pub fn sub_index(&self, c: f64, pollutant: Pollutant) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(Error::invalid(format!("concentration must be non-negative, got {c}")));
        }
        let bands = self
            .bands(pollutant)
            .ok_or_else(|| Error::UnknownPollutant(pollutant.name().to_owned()))?;
        let Some(band) = bands.iter().find(|b| c <= b.b_hi) else {
            return Ok(MAX_INDEX);
        };
        let c = c.max(band.b_lo);
        Ok((band.i_hi - band.i_lo) / (band.b_hi - band.b_lo) * (c - band.b_lo) + band.i_lo)
    }

    pub fn aqi(&self, pm25: f64, pm10: f64) -> Result<AqiResult> {
        let i25 = self.sub_index(pm25, Pollutant::Pm25)?;
        let i10 = self.sub_index(pm10, Pollutant::Pm10)?;
        let (aqi, dominant) = if i25 >= i10 { (i25, Pollutant::Pm25) } else { (i10, Pollutant::Pm10) };
        Ok(AqiResult { aqi, pm25_index: i25, pm10_index: i10, dominant })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AqiResult {
    pub aqi: f64,
    pub pm25_index: f64,
    pub pm10_index: f64,
    /// Ties go to PM2.5.
    pub dominant: Pollutant,
}

pub fn sub_index(c: f64, pollutant: Pollutant, table: &BreakpointTable) -> Result<f64> {
    table.sub_index(c, pollutant)
}

pub fn aqi(pm25: f64, pm10: f64, table: &BreakpointTable) -> Result<AqiResult> {
    table.aqi(pm25, pm10)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn documented_values() {
        let t = BreakpointTable::cpcb();
        assert_eq!(t.sub_index(40.0, Pollutant::Pm10).unwrap(), 40.0);
        assert_eq!(t.sub_index(0.0, Pollutant::Pm10).unwrap(), 0.0);
        assert_eq!(t.sub_index(0.0, Pollutant::Pm25).unwrap(), 0.0);
        assert_eq!(t.sub_index(30.0, Pollutant::Pm25).unwrap(), 50.0);
        assert_eq!(t.sub_index(60.0, Pollutant::Pm25).unwrap(), 100.0);
        assert_eq!(t.sub_index(100.0, Pollutant::Pm10).unwrap(), 100.0);
        // hand interpolation: (200-100)/(250-100)*(175-100)+100 = 150
        assert!((t.sub_index(175.0, Pollutant::Pm10).unwrap() - 150.0).abs() < 1e-12);
    }

    #[test]
    fn clamps_above_scale() {
        let t = BreakpointTable::cpcb();
        assert_eq!(t.sub_index(10_000.0, Pollutant::Pm10).unwrap(), 500.0);
        assert_eq!(t.sub_index(381.0, Pollutant::Pm25).unwrap(), 500.0);
    }

    #[test]
    fn aqi_takes_max() {
        let t = BreakpointTable::cpcb();
        assert_eq!(t.aqi(0.0, 0.0).unwrap().aqi, 0.0);
        let r = t.aqi(60.0, 40.0).unwrap();
        assert_eq!((r.aqi, r.dominant), (100.0, Pollutant::Pm25));
        let r = t.aqi(10.0, 100.0).unwrap();
        assert_eq!((r.aqi, r.dominant), (100.0, Pollutant::Pm10));
    }

    #[test]
    fn errors() {
        let t = BreakpointTable::parse("pm10 0 50 0 50\n").unwrap();
        assert!(matches!(t.sub_index(10.0, Pollutant::Pm25), Err(Error::UnknownPollutant(_))));
        assert!(t.sub_index(-1.0, Pollutant::Pm10).is_err());
        assert!(matches!("so2".parse::<Pollutant>(), Err(Error::UnknownPollutant(_))));
    }

    #[test]
    fn table_validation() {
        assert!(BreakpointTable::parse("pm10 0 50 0 50\npm10 60 100 50 100\n").is_err());
        assert!(BreakpointTable::parse("pm10 50 0 0 50\n").is_err());
        assert!(BreakpointTable::parse("pm10 0 50 0\n").is_err());
        assert!(BreakpointTable::parse("# only comments\n").is_err());
        let t = BreakpointTable::cpcb();
        assert_eq!(t.version, 1);
        assert_eq!(BreakpointTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn continuous_at_breakpoints() {
        let t = BreakpointTable::cpcb();
        for p in [Pollutant::Pm25, Pollutant::Pm10] {
            for b in t.bands(p).unwrap() {
                let below = t.sub_index(b.b_hi - 1e-9, p).unwrap();
                let at = t.sub_index(b.b_hi, p).unwrap();
                let above = t.sub_index(b.b_hi + 1e-9, p).unwrap();
                assert!((below - at).abs() < 1e-6 && (above - at).abs() < 1e-6, "{p:?} at {}", b.b_hi);
            }
        }
    }

    proptest! {
        #[test]
        fn monotone(a in 0.0f64..700.0, b in 0.0f64..700.0) {
            let t = BreakpointTable::cpcb();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for p in [Pollutant::Pm25, Pollutant::Pm10] {
                prop_assert!(t.sub_index(lo, p).unwrap() <= t.sub_index(hi, p).unwrap());
            }
        }

        #[test]
        fn aqi_is_max_of_sub_indices(pm25 in 0.0f64..600.0, pm10 in 0.0f64..800.0) {
            let t = BreakpointTable::cpcb();
            let r = t.aqi(pm25, pm10).unwrap();
            let want = t.sub_index(pm25, Pollutant::Pm25).unwrap().max(t.sub_index(pm10, Pollutant::Pm10).unwrap());
            prop_assert_eq!(r.aqi, want);
            prop_assert!((0.0..=MAX_INDEX).contains(&r.aqi));
        }
    }
}
