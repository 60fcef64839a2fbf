//! Uplink SNR budget for NB-IoT direct access to a LEO satellite.
//!
//! ```text
//! SNR = EIRP + G/T - k_B - FSPL - L_atm - L_shadow - L_scint - L_pol - L_extra - 10 log10(B)
//! ```
//!
//! Polarization loss is carried as its own term; without it the reference
//! uplink figures do not close.

use serde::{Deserialize, Serialize};

use crate::orbit::{slant_range, OrbitGeometry};
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann's constant, dBW/K/Hz.
pub const BOLTZMANN_DBW: f64 = -228.6;
pub const CARRIER_HZ: f64 = 2.0e9;
pub const UL_EIRP_DBW: f64 = -7.0;
pub const SINGLE_TONE_HZ: f64 = 3_750.0;
pub const MULTI_TONE_HZ: f64 = 180_000.0;
/// Uplink data rate reachable with the Set-4 budget, bit/s.
pub const UL_DATA_RATE_BPS: f64 = 1_600.0;
/// Extra loss applied at the beam edge, dB.
pub const BEAM_EDGE_LOSS_DB: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub eirp: f64,
    pub g_over_t: f64,
    pub bandwidth: f64,
    pub frequency: f64,
    pub atmospheric_loss: f64,
    pub shadow_margin: f64,
    pub scintillation_loss: f64,
    pub polarization_loss: f64,
    pub additional_losses: f64,
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.frequency > 0.0) {
            return Err(Error::invalid("bandwidth and frequency must be positive"));
        }
        let losses = [
            self.atmospheric_loss,
            self.shadow_margin,
            self.scintillation_loss,
            self.polarization_loss,
            self.additional_losses,
        ];
        if losses.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::invalid("losses must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnrBreakdown {
    pub eirp: f64,
    pub g_over_t: f64,
    /// `-k_B`, i.e. +228.6.
    pub boltzmann: f64,
    pub path_loss: f64,
    pub atmospheric_loss: f64,
    pub shadow_margin: f64,
    pub scintillation_loss: f64,
    pub polarization_loss: f64,
    pub additional_losses: f64,
    /// `10 log10(B)`.
    pub bandwidth: f64,
    pub snr: f64,
}

impl SnrBreakdown {
    /// Terms with the sign they enter the sum with.
    pub fn signed_terms(&self) -> [(&'static str, f64); 10] {
        [
            ("eirp", self.eirp),
            ("g_over_t", self.g_over_t),
            ("boltzmann", self.boltzmann),
            ("path_loss", -self.path_loss),
            ("atmospheric_loss", -self.atmospheric_loss),
            ("shadow_margin", -self.shadow_margin),
            ("scintillation_loss", -self.scintillation_loss),
            ("polarization_loss", -self.polarization_loss),
            ("additional_losses", -self.additional_losses),
            ("bandwidth", -self.bandwidth),
        ]
    }
}

/// Free-space path loss for `distance` metres at `frequency` Hz, dB.
pub fn fspl(frequency: f64, distance: f64) -> Result<f64> {
    if !(frequency > 0.0 && distance > 0.0) {
        return Err(Error::invalid("frequency and distance must be positive"));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance * frequency / SPEED_OF_LIGHT).log10())
}

pub fn snr(config: &RadioConfig, path_loss: f64) -> Result<SnrBreakdown> {
    config.validate()?;
    let mut b = SnrBreakdown {
        eirp: config.eirp,
        g_over_t: config.g_over_t,
        boltzmann: -BOLTZMANN_DBW,
        path_loss,
        atmospheric_loss: config.atmospheric_loss,
        shadow_margin: config.shadow_margin,
        scintillation_loss: config.scintillation_loss,
        polarization_loss: config.polarization_loss,
        additional_losses: config.additional_losses,
        bandwidth: 10.0 * config.bandwidth.log10(),
        snr: 0.0,
    };
    b.snr = b.signed_terms().iter().map(|t| t.1).sum();
    Ok(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetId {
    #[serde(rename = "set-1")]
    Set1,
    #[serde(rename = "set-4")]
    Set4,
}

impl SetId {
    pub fn name(self) -> &'static str {
        match self {
            SetId::Set1 => "Set-1",
            SetId::Set4 => "Set-4",
        }
    }
}

impl std::str::FromStr for SetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "set1" | "1" => Ok(SetId::Set1),
            "set4" | "4" => Ok(SetId::Set4),
            _ => Err(Error::UnknownPreset(s.to_owned())),
        }
    }
}

/// Satellite beam and radio parameters of one 600 km configuration set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub set: SetId,
    pub beam_center_elevation: f64,
    pub beam_edge_elevation: f64,
    pub beamwidth_3db: f64,
    /// Downlink EIRP density, dBW/MHz.
    pub eirp_density: f64,
    pub g_over_t: f64,
    /// Uplink radio configuration (single-tone, beam centre).
    pub radio: RadioConfig,
}

pub fn preset(set: SetId) -> Preset {
    let (center, edge, bw, density, gt) = match set {
        SetId::Set1 => (30.0, 27.0, 4.4127, 34.0, 1.1),
        SetId::Set4 => (90.0, 30.0, 104.7, 21.45, -18.6),
    };
    Preset {
        set,
        beam_center_elevation: center,
        beam_edge_elevation: edge,
        beamwidth_3db: bw,
        eirp_density: density,
        g_over_t: gt,
        radio: RadioConfig {
            eirp: UL_EIRP_DBW,
            g_over_t: gt,
            bandwidth: SINGLE_TONE_HZ,
            frequency: CARRIER_HZ,
            atmospheric_loss: 0.1,
            shadow_margin: 3.0,
            scintillation_loss: 2.2,
            polarization_loss: 3.0,
            additional_losses: 0.0,
        },
    }
}

pub fn preset_by_name(name: &str) -> Result<Preset> {
    Ok(preset(name.parse()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub set: SetId,
    pub elevation: f64,
    pub beam_edge: bool,
    pub slant_range_km: f64,
    pub single_tone: SnrBreakdown,
    pub multi_tone: SnrBreakdown,
}

/// Uplink budget for both configuration sets at beam edge and centre, for
/// single-tone and full-band transmissions (eight SNR values).
pub fn table3_report(geometry: &OrbitGeometry) -> Result<Vec<LinkBudgetRow>> {
    let mut rows = Vec::with_capacity(4);
    for set in [SetId::Set1, SetId::Set4] {
        let p = preset(set);
        for (elevation, edge) in [(p.beam_edge_elevation, true), (p.beam_center_elevation, false)] {
            let d = slant_range(elevation, geometry)?;
            let mut radio = p.radio;
            radio.additional_losses = if edge { BEAM_EDGE_LOSS_DB } else { 0.0 };
            let pl = fspl(radio.frequency, d * 1e3)?;
            let single = snr(&radio, pl)?;
            let multi = snr(&RadioConfig { bandwidth: MULTI_TONE_HZ, ..radio }, pl)?;
            rows.push(LinkBudgetRow {
                set,
                elevation,
                beam_edge: edge,
                slant_range_km: d,
                single_tone: single,
                multi_tone: multi,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_values() {
        assert!((fspl(2e9, 600e3).unwrap() - 154.03).abs() < 0.01);
        assert!((fspl(2e9, 1075.1e3).unwrap() - 159.10).abs() < 0.01);
        let unit = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 2e9);
        assert!(fspl(2e9, unit).unwrap().abs() < 1e-12);
        assert!(fspl(0.0, 1.0).is_err());
    }

    #[test]
    fn boltzmann_only() {
        let cfg = RadioConfig {
            eirp: 0.0,
            g_over_t: 0.0,
            bandwidth: 1.0,
            frequency: 1.0,
            atmospheric_loss: 0.0,
            shadow_margin: 0.0,
            scintillation_loss: 0.0,
            polarization_loss: 0.0,
            additional_losses: 0.0,
        };
        assert!((snr(&cfg, 0.0).unwrap().snr - 228.6).abs() < 1e-12);
    }

    #[test]
    fn reference_points() {
        let p4 = preset(SetId::Set4);
        let s = snr(&p4.radio, 154.03).unwrap();
        assert!((s.snr - 4.93).abs() < 0.01);
        let p1 = preset(SetId::Set1);
        assert!((snr(&p1.radio, 159.1).unwrap().snr - 19.56).abs() < 0.01);
    }

    #[test]
    fn presets() {
        assert_eq!(preset(SetId::Set1).g_over_t, 1.1);
        assert_eq!(preset(SetId::Set4).beam_edge_elevation, 30.0);
        assert_eq!(preset(SetId::Set4).eirp_density, 21.45);
        assert_eq!(preset(SetId::Set4).radio.eirp, -7.0);
        assert!(matches!(preset_by_name("set-9"), Err(Error::UnknownPreset(_))));
        assert_eq!(preset_by_name("Set-1").unwrap().set, SetId::Set1);
    }

    #[test]
    fn breakdown_sums() {
        for row in table3_report(&OrbitGeometry::default()).unwrap() {
            for b in [row.single_tone, row.multi_tone] {
                let sum: f64 = b.signed_terms().iter().map(|t| t.1).sum();
                assert!((sum - b.snr).abs() < 1e-9);
            }
            let gap = row.single_tone.snr - row.multi_tone.snr;
            assert!((gap - 10.0 * (180.0f64 / 3.75).log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_in_db_inputs() {
        let base = preset(SetId::Set4).radio;
        let a = snr(&base, 150.0).unwrap().snr;
        let b = snr(&RadioConfig { eirp: base.eirp + 2.5, ..base }, 150.0).unwrap().snr;
        assert!((b - a - 2.5).abs() < 1e-12);
        let c = snr(&RadioConfig { bandwidth: base.bandwidth * 10.0, ..base }, 150.0).unwrap().snr;
        assert!((a - c - 10.0).abs() < 1e-12);
    }
}
