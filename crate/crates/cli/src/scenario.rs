//! Scenario file: one JSON document configuring every experiment.
//!
//! All fields are optional; missing ones take the defaults shown by
//! `leoiot template`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use leoiot_core::access::{RachConfig, DEFAULT_AGGREGATE_RATE_BPS};
use leoiot_core::energy::{DutyCycle, PowerProfile, DEFAULT_BATTERY_MWH};
use leoiot_core::linkbudget::SetId;
use leoiot_core::mlpredict::{ForestParams, ModelKind};
use leoiot_core::orbit::OrbitGeometry;
use leoiot_core::shewhart::{Mode, Threshold};
use leoiot_core::timeseries::{SyntheticConfig, DEFAULT_CADENCE, DEFAULT_MA_WINDOW};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub thresholds: Threshold,
    pub modes: Vec<Mode>,
    /// Threshold multipliers for the reduction-vs-threshold sweep.
    pub threshold_scales: Vec<f64>,
    pub model: ModelConfig,
    pub orbit: OrbitGeometry,
    pub visibility: VisibilityConfig,
    pub radio: RadioChoice,
    pub rach: RachConfig,
    pub collision: CollisionConfig,
    pub effective_data: EffectiveDataConfig,
    pub energy: EnergyConfig,
    pub traffic: TrafficConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "default".into(),
            seed: 1,
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            thresholds: Threshold::default(),
            modes: Mode::ALL.to_vec(),
            threshold_scales: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            model: ModelConfig::default(),
            orbit: OrbitGeometry::default(),
            visibility: VisibilityConfig::default(),
            radio: RadioChoice::default(),
            rach: RachConfig::default(),
            collision: CollisionConfig::default(),
            effective_data: EffectiveDataConfig::default(),
            energy: EnergyConfig::default(),
            traffic: TrafficConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Sensor CSV; when absent the synthetic generator is used.
    pub input: Option<PathBuf>,
    pub cadence: u32,
    pub ma_window: usize,
    /// Its `seed` is replaced by one derived from the master seed.
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            input: None,
            cadence: DEFAULT_CADENCE,
            ma_window: DEFAULT_MA_WINDOW,
            synthetic: SyntheticConfig { n_devices: 5, duration: 3 * 86_400, ..Default::default() },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Predictor the server uses for M2/M3.
    pub kind: ModelKind,
    pub forest: ForestParams,
    pub train_fraction: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Forest,
            forest: ForestParams { n_estimators: 30, ..Default::default() },
            train_fraction: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisibilityConfig {
    pub altitudes: Vec<f64>,
    pub masks: Vec<f64>,
    pub elevation_step: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            altitudes: vec![500.0, 600.0, 800.0, 1000.0, 1200.0],
            masks: vec![10.0, 20.0, 30.0],
            elevation_step: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioChoice {
    pub preset: SetId,
}

impl Default for RadioChoice {
    fn default() -> Self {
        RadioChoice { preset: SetId::Set4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionConfig {
    pub n_max: u32,
    pub sim_points: Vec<u32>,
    pub trials: u32,
    pub target: f64,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig { n_max: 120, sim_points: vec![10, 25, 42, 57, 100, 200], trials: 2000, target: 0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelledReduction {
    pub label: String,
    pub reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveDataConfig {
    /// bit/s
    pub aggregate_rate: f64,
    pub max_visibility: f64,
    pub step: f64,
    pub series: Vec<LabelledReduction>,
}

impl Default for EffectiveDataConfig {
    fn default() -> Self {
        let lr = |label: &str, reduction| LabelledReduction { label: label.into(), reduction };
        EffectiveDataConfig {
            aggregate_rate: DEFAULT_AGGREGATE_RATE_BPS,
            max_visibility: 300.0,
            step: 10.0,
            series: vec![lr("baseline", 0.0), lr("M1", 0.8716), lr("M2", 0.8833), lr("M3", 0.9654)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub profile: PowerProfile,
    /// Visibility, sensing period, GNSS count and overhead; the event count
    /// and payload come from each mode.
    pub duty: DutyCycle,
    pub battery_mwh: f64,
    pub inter_pass_hours: Vec<f64>,
    /// Reductions for M1, M2, M3 (fractions).
    pub reductions: [f64; 3],
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            profile: PowerProfile::default(),
            duty: DutyCycle::default(),
            battery_mwh: DEFAULT_BATTERY_MWH,
            inter_pass_hours: vec![2.0, 6.0, 12.0, 24.0],
            reductions: [0.8716, 0.8833, 0.9654],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Seconds.
    pub bin_width: f64,
    pub per_device: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { bin_width: 30.0, per_device: false }
    }
}

fn at<T, E: std::fmt::Display>(path: &str, r: Result<T, E>) -> anyhow::Result<T> {
    r.map_err(|e| anyhow::anyhow!("{path}: {e}"))
}

fn positive(path: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{path}: must be positive, got {v}");
    }
    Ok(())
}

fn fraction(path: &str, v: f64) -> anyhow::Result<()> {
    if !(0.0..1.0).contains(&v) {
        bail!("{path}: must lie in [0, 1), got {v}");
    }
    Ok(())
}

impl Scenario {
    pub fn load(path: &Path) -> anyhow::Result<Scenario> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))
    }

    /// Checks every sub-configuration; messages name the offending key.
    pub fn validate(&self) -> anyhow::Result<()> {
        let d = &self.data;
        if d.cadence == 0 {
            bail!("data.cadence: must be positive");
        }
        if d.ma_window == 0 {
            bail!("data.ma_window: must be at least 1");
        }
        at("data.synthetic", d.synthetic.validate())?;
        at("thresholds", self.thresholds.validate())?;
        if self.modes.is_empty() {
            bail!("modes: at least one mode is required");
        }
        for (i, s) in self.threshold_scales.iter().enumerate() {
            positive(&format!("threshold_scales[{i}]"), *s)?;
        }
        let m = &self.model;
        if !(m.train_fraction > 0.0 && m.train_fraction < 1.0) {
            bail!("model.train_fraction: must lie in (0, 1), got {}", m.train_fraction);
        }
        if m.forest.n_estimators == 0 {
            bail!("model.forest.n_estimators: must be at least 1");
        }
        at("orbit", self.orbit.validate())?;
        let v = &self.visibility;
        for (i, h) in v.altitudes.iter().enumerate() {
            positive(&format!("visibility.altitudes[{i}]"), *h)?;
        }
        for (i, mask) in v.masks.iter().enumerate() {
            if !(0.0..=90.0).contains(mask) {
                bail!("visibility.masks[{i}]: must lie in [0, 90], got {mask}");
            }
        }
        positive("visibility.elevation_step", v.elevation_step)?;
        at("rach", self.rach.validate())?;
        let c = &self.collision;
        if c.n_max == 0 {
            bail!("collision.n_max: must be at least 1");
        }
        if c.trials == 0 {
            bail!("collision.trials: must be at least 1");
        }
        if !(c.target > 0.0 && c.target < 1.0) {
            bail!("collision.target: must lie in (0, 1), got {}", c.target);
        }
        let e = &self.effective_data;
        positive("effective_data.aggregate_rate", e.aggregate_rate)?;
        positive("effective_data.max_visibility", e.max_visibility)?;
        positive("effective_data.step", e.step)?;
        for (i, s) in e.series.iter().enumerate() {
            fraction(&format!("effective_data.series[{i}].reduction"), s.reduction)?;
        }
        let en = &self.energy;
        at("energy.profile", en.profile.validate())?;
        at("energy.duty", en.duty.validate())?;
        positive("energy.battery_mwh", en.battery_mwh)?;
        for (i, h) in en.inter_pass_hours.iter().enumerate() {
            if !(h * 3600.0 > en.duty.visibility) {
                bail!("energy.inter_pass_hours[{i}]: {h} h does not exceed the visibility window");
            }
        }
        for (i, r) in en.reductions.iter().enumerate() {
            fraction(&format!("energy.reductions[{i}]"), *r)?;
        }
        positive("traffic.bin_width", self.traffic.bin_width)?;
        Ok(())
    }

    /// Canonical JSON used for hashing and for the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Per-component seed: first eight bytes of sha256(master ‖ label).
/// New labels never shift the seeds of existing ones.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Scenario::default().validate().unwrap();
    }

    #[test]
    fn empty_json_is_default() {
        let s: Scenario = serde_json::from_str("{}").unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn errors_name_the_key() {
        let mut s = Scenario::default();
        s.rach.p_bo = 2.0;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.starts_with("rach:"), "{msg}");
        let mut s = Scenario::default();
        s.energy.reductions[1] = 1.0;
        assert!(s.validate().unwrap_err().to_string().starts_with("energy.reductions[1]"));
        let mut s = Scenario::default();
        s.orbit.altitude = -5.0;
        assert!(s.validate().unwrap_err().to_string().starts_with("orbit:"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<Scenario>(r#"{"rach": {"m": 4}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(1, "synthetic"), derive_seed(1, "synthetic"));
        assert_ne!(derive_seed(1, "synthetic"), derive_seed(1, "collision"));
        assert_ne!(derive_seed(1, "synthetic"), derive_seed(2, "synthetic"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Scenario::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
