//! NPRACH contention: the binomial/exponential collision model, a slotted
//! Monte-Carlo simulator to check it, capacity inversion and effective data.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linkbudget::UL_DATA_RATE_BPS;
use crate::{seeded_rng, Error, Result};

pub const DEFAULT_SUBCARRIERS: u32 = 48;
/// 48 single-tone carriers at 1.6 kbit/s each.
pub const DEFAULT_AGGREGATE_RATE_BPS: f64 = DEFAULT_SUBCARRIERS as f64 * UL_DATA_RATE_BPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackoffUnit {
    Ms,
    Sec,
}

impl BackoffUnit {
    fn millis(self) -> u64 {
        match self {
            BackoffUnit::Ms => 1,
            BackoffUnit::Sec => 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RachConfig {
    pub m_rao: u32,
    /// ms
    pub rao_period: f64,
    pub p_bo: f64,
    /// Back-off window is `[0, backoff_base * 2^backoff_index]` units.
    pub backoff_index: u32,
    /// 0 makes every retry land in the next RAO.
    pub backoff_base: u64,
    pub backoff_unit: BackoffUnit,
    /// Use the exact binomial reattempt count instead of the exponential form.
    pub exact_reattempts: bool,
    /// Attempts per node before it gives up (simulation only).
    pub max_attempts: u32,
}

impl Default for RachConfig {
    fn default() -> Self {
        RachConfig {
            m_rao: DEFAULT_SUBCARRIERS,
            rao_period: 160.0,
            p_bo: 1.0,
            backoff_index: 10,
            backoff_base: 256,
            backoff_unit: BackoffUnit::Ms,
            exact_reattempts: false,
            max_attempts: 10,
        }
    }
}

impl RachConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_rao < 1 {
            return Err(Error::invalid("m_rao must be at least 1"));
        }
        if !(self.rao_period > 0.0) {
            return Err(Error::invalid(format!("rao_period must be positive, got {}", self.rao_period)));
        }
        if !(0.0..=1.0).contains(&self.p_bo) {
            return Err(Error::invalid(format!("p_bo must lie in [0, 1], got {}", self.p_bo)));
        }
        if self.backoff_index > 40 {
            return Err(Error::invalid("backoff_index above 40 overflows the window"));
        }
        if self.max_attempts < 1 {
            return Err(Error::invalid("max_attempts must be at least 1"));
        }
        Ok(())
    }

    /// Upper end of the back-off window in ms.
    pub fn backoff_window_ms(&self) -> u64 {
        self.backoff_base.saturating_mul(1 << self.backoff_index).saturating_mul(self.backoff_unit.millis())
    }
}

/// Probability that exactly `k` of `n` nodes pick a given one of `m`
/// subcarriers.
pub fn p_select_k(n: u64, k: u64, m: u32) -> Result<f64> {
    if k > n || m < 1 {
        return Err(Error::invalid(format!("need 0 <= k <= n and m >= 1 (n={n}, k={k}, m={m})")));
    }
    let q = 1.0 / m as f64;
    let short = k.min(n - k);
    let mut binom = 1.0;
    for i in 1..=short {
        binom *= (n - short + i) as f64 / i as f64;
    }
    Ok(binom * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32))
}

/// Expected number of nodes that collide and reattempt.
pub fn expected_reattempts(n: f64, m: u32, exact: bool) -> Result<f64> {
    if !(n >= 0.0) || m < 1 {
        return Err(Error::invalid(format!("need n >= 0 and m >= 1 (n={n}, m={m})")));
    }
    let m = m as f64;
    if exact {
        if n < 1.0 {
            return Ok(0.0);
        }
        Ok(n - n * ((m - 1.0) / m).powf(n - 1.0))
    } else {
        Ok(n * (1.0 - (-n / m).exp()))
    }
}

pub fn p_collision(n: f64, config: &RachConfig) -> Result<f64> {
    config.validate()?;
    let n_coll = expected_reattempts(n, config.m_rao, config.exact_reattempts)?;
    Ok(1.0 - (-n_coll * config.p_bo / config.m_rao as f64).exp())
}

/// Largest node count whose collision probability stays at or below
/// `p_target`.
pub fn capacity_at_target(p_target: f64, config: &RachConfig) -> Result<u64> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::invalid(format!("p_target must lie in (0, 1), got {p_target}")));
    }
    if p_collision(1.0, config)? > p_target {
        return Err(Error::CapacityUnreachable(p_target));
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while p_collision(hi as f64, config)? <= p_target {
        lo = hi;
        hi = hi.checked_mul(2).filter(|h| *h <= 1 << 40).ok_or_else(|| {
            Error::invalid(format!("collision probability never exceeds {p_target}"))
        })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if p_collision(mid as f64, config)? <= p_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Bytes delivered over a pass, counting the values the server recovers by
/// last-value hold for suppressed transmissions.
pub fn effective_data(visibility: f64, aggregate_rate: f64, reduction_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&reduction_fraction) {
        return Err(Error::Reduction(reduction_fraction));
    }
    if !(visibility >= 0.0 && aggregate_rate >= 0.0) {
        return Err(Error::invalid("visibility and rate must be non-negative"));
    }
    Ok(aggregate_rate * visibility / 8.0 / (1.0 - reduction_fraction))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// `n` nodes all contend in the first RAO.
    Batch(u32),
    /// `per_rao` fresh nodes join every RAO for `raos` consecutive RAOs.
    Steady { per_rao: u32, raos: u32 },
}

impl ArrivalProcess {
    fn offered(&self) -> u64 {
        match *self {
            ArrivalProcess::Batch(n) => n as u64,
            ArrivalProcess::Steady { per_rao, raos } => per_rao as u64 * raos as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StatsSource {
    Analytic,
    Simulated { trials: u32, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttemptStats {
    pub attempts: u64,
    pub collisions: u64,
    pub p_coll: f64,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionStats {
    pub n_offered: f64,
    pub p_success: f64,
    pub p_coll: f64,
    /// Expected colliding nodes (analytic) or mean collided attempts per
    /// trial (simulated).
    pub n_coll: f64,
    pub source: StatsSource,
    /// 95% normal-approximation half-width; zero for analytic stats.
    pub half_width: f64,
    /// Entry `k` covers each node's `(k+1)`-th attempt.
    pub by_attempt: Vec<AttemptStats>,
}

pub fn analytic_stats(n: f64, config: &RachConfig) -> Result<CollisionStats> {
    let p = p_collision(n, config)?;
    Ok(CollisionStats {
        n_offered: n,
        p_success: 1.0 - p,
        p_coll: p,
        n_coll: expected_reattempts(n, config.m_rao, config.exact_reattempts)?,
        source: StatsSource::Analytic,
        half_width: 0.0,
        by_attempt: Vec::new(),
    })
}

/// Per-trial counts: (attempts, collisions) indexed by attempt number.
type TrialCounts = Vec<(u64, u64)>;

fn simulate_trial(arrivals: &ArrivalProcess, config: &RachConfig, seed: u64, trial: u64) -> TrialCounts {
    let mut rng = seeded_rng(seed, trial);
    let m = config.m_rao as usize;
    let window = config.backoff_window_ms();
    let mut counts: TrialCounts = vec![(0, 0); config.max_attempts as usize];
    // RAO index -> attempt numbers of the nodes contending there
    let mut pending: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    match *arrivals {
        ArrivalProcess::Batch(n) => {
            if n > 0 {
                pending.insert(0, vec![0; n as usize]);
            }
        }
        ArrivalProcess::Steady { per_rao, raos } => {
            if per_rao > 0 {
                for r in 0..raos as u64 {
                    pending.insert(r, vec![0; per_rao as usize]);
                }
            }
        }
    }
    let mut picks = Vec::new();
    let mut occupancy = vec![0u32; m];
    while let Some((rao, nodes)) = pending.pop_first() {
        occupancy.iter_mut().for_each(|c| *c = 0);
        picks.clear();
        for _ in &nodes {
            let s = rng.random_range(0..m);
            occupancy[s] += 1;
            picks.push(s);
        }
        for (&attempt, &s) in nodes.iter().zip(&picks) {
            let entry = &mut counts[attempt as usize];
            entry.0 += 1;
            if occupancy[s] == 1 {
                continue;
            }
            entry.1 += 1;
            let next = attempt + 1;
            if next >= config.max_attempts || !(rng.random::<f64>() < config.p_bo) {
                continue;
            }
            let delay_ms = if window == 0 { 0 } else { rng.random_range(0..=window) };
            let skip = (delay_ms as f64 / config.rao_period).floor() as u64;
            pending.entry(rao + 1 + skip).or_default().push(next);
        }
    }
    counts
}

/// 95% half-width of the ratio estimate `sum(c) / sum(a)` over trials.
fn ratio_half_width(per_trial: &[(u64, u64)], p: f64) -> f64 {
    let t = per_trial.len() as f64;
    if t < 2.0 {
        return 0.0;
    }
    let mean_a = per_trial.iter().map(|x| x.0 as f64).sum::<f64>() / t;
    if mean_a == 0.0 {
        return 0.0;
    }
    let resid: Vec<f64> = per_trial.iter().map(|&(a, c)| c as f64 - p * a as f64).collect();
    let mean_r = resid.iter().sum::<f64>() / t;
    let var = resid.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / (t - 1.0);
    1.96 * var.sqrt() / (mean_a * t.sqrt())
}

/// Slotted random-access simulation. Trials run in parallel, each on its own
/// seeded stream, so results depend only on `(seed, n_trials)`.
pub fn simulate_rach(arrivals: ArrivalProcess, config: &RachConfig, n_trials: u32, seed: u64) -> Result<CollisionStats> {
    config.validate()?;
    if n_trials < 1 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let trials: Vec<TrialCounts> =
        (0..n_trials as u64).into_par_iter().map(|t| simulate_trial(&arrivals, config, seed, t)).collect();

    let k_max = config.max_attempts as usize;
    let mut by_attempt = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let col: Vec<(u64, u64)> = trials.iter().map(|c| c[k]).collect();
        let attempts: u64 = col.iter().map(|x| x.0).sum();
        if attempts == 0 {
            break;
        }
        let collisions: u64 = col.iter().map(|x| x.1).sum();
        let p = collisions as f64 / attempts as f64;
        by_attempt.push(AttemptStats { attempts, collisions, p_coll: p, half_width: ratio_half_width(&col, p) });
    }
    let totals: Vec<(u64, u64)> = trials
        .iter()
        .map(|c| c.iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1)))
        .collect();
    let attempts: u64 = totals.iter().map(|x| x.0).sum();
    let collisions: u64 = totals.iter().map(|x| x.1).sum();
    let p = if attempts == 0 { 0.0 } else { collisions as f64 / attempts as f64 };
    Ok(CollisionStats {
        n_offered: arrivals.offered() as f64,
        p_success: 1.0 - p,
        p_coll: p,
        n_coll: collisions as f64 / n_trials as f64,
        source: StatsSource::Simulated { trials: n_trials, seed },
        half_width: ratio_half_width(&totals, p),
        by_attempt,
    })
}

/// Exact probability that a node's first attempt collides when `n` nodes
/// contend on `m` subcarriers.
pub fn first_attempt_collision(n: u64, m: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - ((m as f64 - 1.0) / m as f64).powi((n - 1) as i32)
}
