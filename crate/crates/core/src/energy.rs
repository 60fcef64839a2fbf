//! Battery lifetime from a power-state table and a per-pass duty cycle.
//!
//! One cycle spans the inter-pass duration: GNSS fixes at the start of the
//! pass, RX + TX + idle for every transmission event, an optional active
//! overhead, and sleep for the rest of the cycle.

use serde::{Deserialize, Serialize};

use crate::shewhart::{TransmissionLog, FULL_PAYLOAD, REDUCED_PAYLOAD};
use crate::{Error, Result};

pub const HOURS_PER_YEAR: f64 = 8760.0;
pub const DEFAULT_BATTERY_MWH: f64 = 5000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerState {
    pub duration_ms: f64,
    pub power_mw: f64,
}

impl PowerState {
    /// mWs
    pub fn energy(&self) -> f64 {
        self.duration_ms / 1000.0 * self.power_mw
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerProfile {
    pub rx: PowerState,
    pub tx_50: PowerState,
    pub tx_200: PowerState,
    pub idle: PowerState,
    pub sleep_mw: f64,
    pub gnss: PowerState,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            rx: PowerState { duration_ms: 371.0, power_mw: 90.0 },
            tx_50: PowerState { duration_ms: 335.0, power_mw: 543.0 },
            tx_200: PowerState { duration_ms: 1006.0, power_mw: 543.0 },
            idle: PowerState { duration_ms: 22_423.0, power_mw: 2.4 },
            sleep_mw: 0.015,
            gnss: PowerState { duration_ms: 2000.0, power_mw: 37.0 },
        }
    }
}

impl PowerProfile {
    pub fn validate(&self) -> Result<()> {
        let states = [self.rx, self.tx_50, self.tx_200, self.idle, self.gnss];
        let ok = states.iter().all(|s| s.duration_ms >= 0.0 && s.power_mw >= 0.0) && self.sleep_mw >= 0.0;
        if !ok {
            return Err(Error::invalid("power profile entries must be non-negative"));
        }
        Ok(())
    }

    pub fn tx(&self, payload: u32) -> Result<PowerState> {
        match payload {
            REDUCED_PAYLOAD => Ok(self.tx_50),
            FULL_PAYLOAD => Ok(self.tx_200),
            other => Err(Error::UnsupportedPayload(other)),
        }
    }

    /// Seconds the radio is busy for one event.
    pub fn event_duration(&self, payload: u32) -> Result<f64> {
        Ok((self.rx.duration_ms + self.tx(payload)?.duration_ms + self.idle.duration_ms) / 1000.0)
    }
}

/// RX + TX + idle energy of one transmission event, mWs.
pub fn per_event_energy(payload: u32, profile: &PowerProfile) -> Result<f64> {
    Ok(profile.rx.energy() + profile.tx(payload)?.energy() + profile.idle.energy())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DutyCycle {
    /// Seconds of visibility per pass.
    pub visibility: f64,
    /// Seconds between the starts of consecutive passes.
    pub inter_pass: f64,
    pub sensing_period: f64,
    pub transmissions_per_pass: f64,
    pub gnss_per_pass: f64,
    /// Extra energy per pass, mWs.
    pub overhead: f64,
    pub payload: u32,
}

impl Default for DutyCycle {
    fn default() -> Self {
        DutyCycle {
            visibility: 300.0,
            inter_pass: 7200.0,
            sensing_period: 30.0,
            transmissions_per_pass: 10.0,
            gnss_per_pass: 1.0,
            overhead: 0.0,
            payload: FULL_PAYLOAD,
        }
    }
}

impl DutyCycle {
    pub fn slots_per_pass(&self) -> f64 {
        self.visibility / self.sensing_period
    }

    /// Sets the event count to the slots left after a mode's reduction.
    pub fn with_reduction(mut self, reduction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&reduction) {
            return Err(Error::Reduction(reduction));
        }
        self.transmissions_per_pass = (1.0 - reduction) * self.slots_per_pass();
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.visibility > 0.0 && self.sensing_period > 0.0) {
            return Err(Error::invalid("visibility and sensing period must be positive"));
        }
        if !(self.inter_pass > self.visibility) {
            return Err(Error::invalid(format!(
                "inter-pass duration {} must exceed visibility {}",
                self.inter_pass, self.visibility
            )));
        }
        if !(self.transmissions_per_pass >= 0.0 && self.transmissions_per_pass <= self.slots_per_pass() + 1e-9) {
            return Err(Error::invalid(format!(
                "transmissions per pass {} outside [0, {}]",
                self.transmissions_per_pass,
                self.slots_per_pass()
            )));
        }
        if !(self.gnss_per_pass >= 0.0 && self.overhead >= 0.0) {
            return Err(Error::invalid("gnss count and overhead must be non-negative"));
        }
        Ok(())
    }
}

/// Mean number of events per pass when passes start every `inter_pass`
/// seconds from the log's first slot and last `visibility` seconds.
pub fn transmissions_per_pass(log: &TransmissionLog, visibility: f64, inter_pass: f64) -> Result<f64> {
    if !(visibility > 0.0 && inter_pass >= visibility) {
        return Err(Error::invalid("need 0 < visibility <= inter-pass"));
    }
    let span = log.total_slots as f64 * log.cadence as f64;
    let passes = (span / inter_pass).ceil().max(1.0);
    let inside = log
        .slots()
        .filter(|&s| (s as f64 * log.cadence as f64).rem_euclid(inter_pass) < visibility)
        .count();
    Ok(inside as f64 / passes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub gnss: f64,
    pub rx: f64,
    pub tx: f64,
    pub idle: f64,
    pub overhead: f64,
    pub sleep: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.gnss + self.rx + self.tx + self.idle + self.overhead + self.sleep
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LifetimeEstimate {
    /// Per cycle, mWs.
    pub breakdown: EnergyBreakdown,
    pub cycle_energy_mwh: f64,
    pub average_power_mw: f64,
    pub lifetime_years: f64,
}

pub fn lifetime(duty: &DutyCycle, profile: &PowerProfile, battery_mwh: f64) -> Result<LifetimeEstimate> {
    if !(battery_mwh > 0.0) {
        return Err(Error::invalid(format!("battery capacity must be positive, got {battery_mwh}")));
    }
    duty.validate()?;
    profile.validate()?;
    let events = duty.transmissions_per_pass;
    let active = duty.gnss_per_pass * profile.gnss.duration_ms / 1000.0 + events * profile.event_duration(duty.payload)?;
    if active > duty.inter_pass {
        return Err(Error::invalid(format!("active time {active} s exceeds the inter-pass duration")));
    }
    let breakdown = EnergyBreakdown {
        gnss: duty.gnss_per_pass * profile.gnss.energy(),
        rx: events * profile.rx.energy(),
        tx: events * profile.tx(duty.payload)?.energy(),
        idle: events * profile.idle.energy(),
        overhead: duty.overhead,
        sleep: profile.sleep_mw * (duty.inter_pass - active),
    };
    let total = breakdown.total();
    let average_power_mw = total / duty.inter_pass;
    if !(average_power_mw > 0.0) {
        return Err(Error::invalid("average power is zero; lifetime is unbounded"));
    }
    Ok(LifetimeEstimate {
        breakdown,
        cycle_energy_mwh: total / 3600.0,
        average_power_mw,
        lifetime_years: battery_mwh / average_power_mw / HOURS_PER_YEAR,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeProfile {
    pub label: String,
    pub reduction: f64,
    pub payload: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifetimeCell {
    pub label: String,
    pub payload: u32,
    pub inter_pass_hours: f64,
    pub estimate: LifetimeEstimate,
}

/// Lifetime grid over modes and inter-pass durations. `base` supplies
/// visibility, sensing period, GNSS count and overhead.
pub fn table7_report(
    modes: &[ModeProfile],
    inter_pass_hours: &[f64],
    base: &DutyCycle,
    profile: &PowerProfile,
    battery_mwh: f64,
) -> Result<Vec<LifetimeCell>> {
    let mut out = Vec::with_capacity(modes.len() * inter_pass_hours.len());
    for m in modes {
        for &h in inter_pass_hours {
            let duty = DutyCycle { inter_pass: h * 3600.0, payload: m.payload, ..*base }.with_reduction(m.reduction)?;
            out.push(LifetimeCell {
                label: m.label.clone(),
                payload: m.payload,
                inter_pass_hours: h,
                estimate: lifetime(&duty, profile, battery_mwh)?,
            });
        }
    }
    Ok(out)
}

/// Baseline and the three Shewhart modes with the given reductions.
pub fn default_modes(reductions: [f64; 3]) -> Vec<ModeProfile> {
    let [m1, m2, m3] = reductions;
    vec![
        ModeProfile { label: "baseline".into(), reduction: 0.0, payload: FULL_PAYLOAD },
        ModeProfile { label: "M1".into(), reduction: m1, payload: FULL_PAYLOAD },
        ModeProfile { label: "M2".into(), reduction: m2, payload: REDUCED_PAYLOAD },
        ModeProfile { label: "M3".into(), reduction: m3, payload: REDUCED_PAYLOAD },
    ]
}
