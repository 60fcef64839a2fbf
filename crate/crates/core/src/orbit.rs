//! Circular-orbit pass geometry: slant range and visibility duration.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
pub const EARTH_ROTATION_RAD_S: f64 = 7.2921159e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitGeometry {
    /// Altitude above the surface, km.
    pub altitude: f64,
    /// Degrees.
    pub inclination: f64,
    pub earth_radius: f64,
    pub mu: f64,
    pub earth_rotation: f64,
}

impl Default for OrbitGeometry {
    fn default() -> Self {
        OrbitGeometry {
            altitude: 600.0,
            inclination: 81.0,
            earth_radius: EARTH_RADIUS_KM,
            mu: EARTH_MU_KM3_S2,
            earth_rotation: EARTH_ROTATION_RAD_S,
        }
    }
}

impl OrbitGeometry {
    pub fn at_altitude(altitude: f64) -> Self {
        OrbitGeometry { altitude, ..Default::default() }
    }

    pub fn orbit_radius(&self) -> f64 {
        self.earth_radius + self.altitude
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0) {
            return Err(Error::invalid(format!("altitude must be positive, got {}", self.altitude)));
        }
        if !(0.0..=180.0).contains(&self.inclination) {
            return Err(Error::invalid(format!("inclination must lie in [0, 180], got {}", self.inclination)));
        }
        if !(self.earth_radius > 0.0 && self.mu > 0.0 && self.earth_rotation >= 0.0) {
            return Err(Error::invalid("earth constants must be positive"));
        }
        Ok(())
    }

    /// Mean motion from Kepler's third law, rad/s.
    pub fn angular_rate(&self) -> f64 {
        (self.mu / self.orbit_radius().powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.angular_rate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassSpec {
    /// Mask angle, degrees.
    pub mask: f64,
    /// Peak elevation of the pass, degrees.
    pub max_elevation: f64,
}

impl PassSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.mask && self.mask <= self.max_elevation && self.max_elevation <= 90.0) {
            return Err(Error::invalid(format!(
                "need 0 <= mask ({}) <= max elevation ({}) <= 90",
                self.mask, self.max_elevation
            )));
        }
        Ok(())
    }
}

pub fn angular_rate(geometry: &OrbitGeometry) -> f64 {
    geometry.angular_rate()
}

/// Distance from a ground terminal to the satellite seen at `elevation`
/// degrees, km.
pub fn slant_range(elevation: f64, geometry: &OrbitGeometry) -> Result<f64> {
    if !(0.0..=90.0).contains(&elevation) {
        return Err(Error::invalid(format!("elevation must lie in [0, 90], got {elevation}")));
    }
    let (re, h) = (geometry.earth_radius, geometry.altitude);
    let s = elevation.to_radians().sin();
    Ok(-re * s + (re * re * s * s + h * h + 2.0 * re * h).sqrt())
}

/// Time a satellite stays above the mask angle during a pass that peaks at
/// `max_elevation`, seconds.
///
/// The Earth-central angle at elevation θ is `acos((r_e / r) cos θ) - θ`
/// with `r = r_e + h`; the pass duration scales the arccos of the ratio of
/// its cosines by the ground-relative angular rate.
pub fn visibility_duration(pass: &PassSpec, geometry: &OrbitGeometry) -> Result<f64> {
    pass.validate()?;
    geometry.validate()?;
    let ratio = geometry.earth_radius / geometry.orbit_radius();
    let central = |elev_deg: f64| -> Result<f64> {
        let th = elev_deg.to_radians();
        Ok(checked_acos(ratio * th.cos())? - th)
    };
    let arg = central(pass.mask)?.cos() / central(pass.max_elevation)?.cos();
    // the ratio is exactly 1 for a zero-length pass but may round above it
    let arg = if pass.mask == pass.max_elevation { 1.0 } else { arg };
    let rate = geometry.angular_rate() - geometry.earth_rotation * geometry.inclination.to_radians().cos();
    Ok(2.0 / rate * checked_acos(arg)?)
}

fn checked_acos(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    Ok(x.acos())
}
