//! Inter-transmission times and a Kolmogorov-Smirnov check of the
//! exponential (Poisson arrival) hypothesis.

use serde::Serialize;

use crate::shewhart::{Mode, TransmissionLog};
use crate::{Error, Result};

/// Asymptotic 5% KS constant.
pub const KS_CRITICAL_5PCT: f64 = 1.36;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterArrivalSet {
    /// Seconds.
    pub gaps: Vec<f64>,
    pub mode: Option<Mode>,
    pub devices: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpFit {
    pub rate: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub ks_statistic: f64,
    pub n: usize,
    pub reject_at_5pct: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub density: f64,
    /// Fitted exponential density at the bin centre.
    pub exp_density: f64,
}

pub fn inter_arrivals(log: &TransmissionLog) -> Result<InterArrivalSet> {
    if log.events.len() < 2 {
        return Err(Error::invalid(format!(
            "device {} has {} events, need at least 2",
            log.device_id,
            log.events.len()
        )));
    }
    let slots: Vec<usize> = log.slots().collect();
    let gaps = slots.windows(2).map(|w| (w[1] - w[0]) as f64 * log.cadence as f64).collect();
    Ok(InterArrivalSet { gaps, mode: Some(log.mode), devices: 1 })
}

/// Gaps of every device pooled together. Devices with fewer than two events
/// contribute nothing.
pub fn pooled_inter_arrivals(logs: &[TransmissionLog]) -> Result<InterArrivalSet> {
    let mut gaps = Vec::new();
    let mut devices = 0;
    let mut modes = logs.iter().map(|l| l.mode);
    let first = modes.next();
    let mode = if modes.all(|m| Some(m) == first) { first } else { None };
    for log in logs.iter().filter(|l| l.events.len() >= 2) {
        gaps.extend(inter_arrivals(log)?.gaps);
        devices += 1;
    }
    if gaps.is_empty() {
        return Err(Error::invalid("no device has two or more events"));
    }
    Ok(InterArrivalSet { gaps, mode, devices })
}

fn check_gaps(gaps: &[f64]) -> Result<()> {
    if gaps.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(g) = gaps.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::invalid(format!("gaps must be positive and finite, got {g}")));
    }
    Ok(())
}

pub fn fit_exponential(gaps: &[f64]) -> Result<ExpFit> {
    check_gaps(gaps)?;
    let n = gaps.len();
    let nf = n as f64;
    let mean = gaps.iter().sum::<f64>() / nf;
    let std_dev = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / nf).sqrt();
    let rate = 1.0 / mean;
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = 1.0 - (-rate * x).exp();
        // compare against both sides of the ECDF step at x
        ks = ks.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    Ok(ExpFit {
        rate,
        mean,
        std_dev,
        ks_statistic: ks,
        n,
        reject_at_5pct: ks > KS_CRITICAL_5PCT / nf.sqrt(),
    })
}

/// Area-normalized histogram with the fitted exponential density alongside.
/// Bins are aligned to multiples of `bin_width` and span the data range.
pub fn pdf_export(gaps: &[f64], bin_width: f64) -> Result<Vec<HistBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let fit = fit_exponential(gaps)?;
    let bin_of = |g: f64| (g / bin_width).floor() as i64;
    let first = gaps.iter().map(|&g| bin_of(g)).min().unwrap_or(0);
    let last = gaps.iter().map(|&g| bin_of(g)).max().unwrap_or(0);
    let mut counts = vec![0usize; (last - first + 1) as usize];
    for &g in gaps {
        counts[(bin_of(g) - first) as usize] += 1;
    }
    let norm = gaps.len() as f64 * bin_width;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let lo = (first + i as i64) as f64 * bin_width;
            let center = lo + bin_width / 2.0;
            HistBin {
                lo,
                hi: lo + bin_width,
                center,
                density: c as f64 / norm,
                exp_density: fit.rate * (-fit.rate * center).exp(),
            }
        })
        .collect())
}
