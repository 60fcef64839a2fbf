//! One function per subcommand. Each returns its files and summary rows
//! without touching the filesystem; `run` assembles and writes them.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use leoiot_core::access::{
    capacity_at_target, effective_data, expected_reattempts, first_attempt_collision, p_collision, simulate_rach,
    ArrivalProcess, RachConfig,
};
use leoiot_core::airquality::BreakpointTable;
use leoiot_core::energy::{default_modes, per_event_energy, table7_report};
use leoiot_core::linkbudget::{fspl, preset, table3_report};
use leoiot_core::mlpredict::{chronological_split, evaluate, ForestParams, Model, ModelKind, Predictor};
use leoiot_core::orbit::{slant_range, visibility_duration, OrbitGeometry, PassSpec};
use leoiot_core::shewhart::{
    reduction_pct, run_mode, server_aqi_rmse, server_rmse, simultaneous_transmitters, write_logs, Mode,
    TransmissionLog, FULL_PAYLOAD, REDUCED_PAYLOAD,
};
use leoiot_core::timeseries::{generate_synthetic, ingest_csv, preprocess, write_csv, Param, SensorSeries};
use leoiot_core::traffic::{fit_exponential, inter_arrivals, pdf_export, pooled_inter_arrivals, KS_CRITICAL_5PCT};
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{derive_seed, Scenario};
use crate::table::{f, Csv, Table};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub metric: String,
    pub value: String,
}

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: BTreeMap<String, Vec<u8>>,
    pub tables: Vec<Table>,
    pub summary: Vec<SummaryRow>,
}

impl Outputs {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        let prev = self.files.insert(name.to_owned(), bytes);
        debug_assert!(prev.is_none(), "{name} emitted twice");
    }

    fn table(&mut self, name: &str, t: Table) {
        self.file(name, t.render().into_bytes());
        self.tables.push(t);
    }

    fn note(&mut self, experiment: &str, metric: &str, value: String) {
        self.summary.push(SummaryRow { experiment: experiment.into(), metric: metric.into(), value });
    }

    pub fn merge(&mut self, other: Outputs) {
        for (k, v) in other.files {
            self.file(&k, v);
        }
        self.tables.extend(other.tables);
        self.summary.extend(other.summary);
    }
}

fn synthetic_series(sc: &Scenario) -> anyhow::Result<Vec<SensorSeries>> {
    let mut cfg = sc.data.synthetic.clone();
    cfg.seed = derive_seed(sc.seed, "synthetic");
    cfg.cadence = sc.data.cadence;
    Ok(generate_synthetic(&cfg)?)
}

/// Preprocessed field data when an input file is configured, synthetic
/// devices otherwise.
pub fn load_series(sc: &Scenario) -> anyhow::Result<Vec<SensorSeries>> {
    let Some(path) = &sc.data.input else {
        return synthetic_series(sc);
    };
    let ingested = ingest_csv(path).with_context(|| format!("data.input: {}", path.display()))?;
    let series = preprocess(&ingested.records, sc.data.cadence, sc.data.ma_window)?;
    if series.is_empty() {
        bail!("data.input: no device-month survives the missing-data filter");
    }
    Ok(series)
}

pub fn generate(sc: &Scenario) -> anyhow::Result<Outputs> {
    let series = synthetic_series(sc)?;
    let mut out = Outputs::default();
    let mut buf = Vec::new();
    write_csv(&series, &mut buf)?;
    out.file("synthetic.csv", buf);
    let mut t = Table::new("Synthetic devices", &["device", "slots", "pm10_mean", "pm25_mean", "temp_mean"]);
    for s in &series {
        let mean = |p: Param| s.column(p).iter().sum::<f64>() / s.len().max(1) as f64;
        t.row(vec![
            s.device_id.clone(),
            s.len().to_string(),
            f(mean(Param::Pm10), 2),
            f(mean(Param::Pm25), 2),
            f(mean(Param::Temp), 2),
        ]);
    }
    out.table("synthetic.txt", t);
    out.note("generate", "devices", series.len().to_string());
    out.note("generate", "slots", series.iter().map(|s| s.len()).sum::<usize>().to_string());
    Ok(out)
}

pub fn preprocess_cmd(sc: &Scenario) -> anyhow::Result<Outputs> {
    let Some(path) = &sc.data.input else {
        bail!("data.input: preprocess needs an input CSV (set it in the scenario or pass --input)");
    };
    let ingested = ingest_csv(path).with_context(|| format!("data.input: {}", path.display()))?;
    let series = preprocess(&ingested.records, sc.data.cadence, sc.data.ma_window)?;
    let mut out = Outputs::default();
    let mut buf = Vec::new();
    write_csv(&series, &mut buf)?;
    out.file("preprocessed.csv", buf);
    let mut t = Table::new("Preprocessed device-months", &["series", "slots", "observed_fraction"]);
    for s in &series {
        t.row(vec![s.device_id.clone(), s.len().to_string(), f(s.presence_ratio(), 4)]);
    }
    out.table("preprocessed.txt", t);
    let mut rej = Csv::new(&["line", "reason"]);
    for r in &ingested.rejected {
        rej.row([r.line.to_string(), r.reason.clone()]);
    }
    out.file("rejected_rows.csv", rej.finish());
    out.note("preprocess", "records", ingested.records.len().to_string());
    out.note("preprocess", "rejected_rows", ingested.rejected.len().to_string());
    out.note("preprocess", "series_kept", series.len().to_string());
    Ok(out)
}

struct TrainedModels {
    chosen: Model,
    fits: Vec<(ModelKind, f64, Option<f64>)>,
}

fn train_models(sc: &Scenario, series: &[SensorSeries]) -> anyhow::Result<TrainedModels> {
    let (mut xt, mut yt, mut xv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for s in series {
        let (x, y) = (s.column(Param::Pm10), s.column(Param::Pm25));
        let ((a, b), (c, d)) = chronological_split(&x, &y, sc.model.train_fraction);
        xt.extend_from_slice(a);
        yt.extend_from_slice(b);
        xv.extend_from_slice(c);
        yv.extend_from_slice(d);
    }
    if xv.is_empty() {
        bail!("model.train_fraction: validation split is empty");
    }
    let params = ForestParams { seed: derive_seed(sc.seed, "forest"), ..sc.model.forest };
    let mut fits = Vec::new();
    let mut chosen = None;
    for kind in [ModelKind::Linear, ModelKind::Tree, ModelKind::Forest] {
        let m = Model::fit(kind, &xt, &yt, params)?;
        let r = evaluate(&m, &xv, &yv)?;
        fits.push((kind, r.rmse, r.r_squared));
        if kind == sc.model.kind {
            chosen = Some(m);
        }
    }
    Ok(TrainedModels { chosen: chosen.expect("every kind is fitted"), fits })
}

fn kind_name(k: ModelKind) -> &'static str {
    match k {
        ModelKind::Linear => "linear",
        ModelKind::Tree => "tree",
        ModelKind::Forest => "forest",
    }
}

type ModeRun = (Mode, Vec<(TransmissionLog, leoiot_core::shewhart::ReconstructedSeries)>);

fn run_all_modes(
    series: &[SensorSeries],
    predictor: &(dyn Predictor + Sync),
    thresholds: &leoiot_core::shewhart::Threshold,
    modes: &[Mode],
) -> anyhow::Result<Vec<ModeRun>> {
    let table = BreakpointTable::cpcb();
    modes
        .iter()
        .map(|&mode| {
            let runs = series
                .par_iter()
                .map(|s| run_mode(s, mode, thresholds, Some(predictor), &table))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((mode, runs))
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn modes(sc: &Scenario) -> anyhow::Result<Outputs> {
    let series = load_series(sc)?;
    let models = train_models(sc, &series)?;
    let table = BreakpointTable::cpcb();
    let mut out = Outputs::default();

    let mut ml = Table::new("PM2.5 from PM10 (validation)", &["model", "rmse", "r_squared"]);
    for (kind, rmse, r2) in &models.fits {
        ml.row(vec![kind_name(*kind).into(), f(*rmse, 4), r2.map_or("n/a".into(), |v| f(v, 4))]);
    }
    out.table("ml_fit.txt", ml);
    out.file("model.txt", models.chosen.to_text().into_bytes());

    let runs = run_all_modes(&series, &models.chosen, &sc.thresholds, &sc.modes)?;
    let mut t = Table::new(
        format!("Transmission modes ({} devices, predictor {})", series.len(), kind_name(sc.model.kind)),
        &["mode", "reduction_pct", "rmse_temp", "rmse_rh", "rmse_pm25", "rmse_pm10", "rmse_aqi", "simultaneous_tx", "bytes_sent"],
    );
    let mut all_logs = Vec::new();
    for (mode, per_dev) in &runs {
        let red: Vec<f64> = per_dev.iter().map(|(l, _)| reduction_pct(l)).collect::<Result<_, _>>()?;
        let mut cells = vec![mode.name().to_owned(), f(mean(&red), 2)];
        for p in Param::ALL {
            let vals: Option<Vec<f64>> =
                per_dev.iter().zip(&series).map(|((_, rec), s)| server_rmse(s, rec, p).ok()).collect();
            cells.push(vals.map_or("-".into(), |v| f(mean(&v), 4)));
        }
        let aqi: Vec<f64> =
            per_dev.iter().zip(&series).map(|((_, rec), s)| server_aqi_rmse(s, rec, &table)).collect::<Result<_, _>>()?;
        cells.push(f(mean(&aqi), 4));
        let logs: Vec<TransmissionLog> = per_dev.iter().map(|(l, _)| l.clone()).collect();
        cells.push(f(simultaneous_transmitters(&logs)?, 4));
        cells.push(logs.iter().map(|l| l.bytes_sent()).sum::<u64>().to_string());
        out.note("modes", &format!("{}_reduction_pct", mode.name()), f(mean(&red), 2));
        t.row(cells);
        all_logs.extend(logs);
    }
    out.table("modes.txt", t);
    let mut buf = Vec::new();
    write_logs(&all_logs, &mut buf)?;
    out.file("transmissions.csv", buf);

    // reduction against threshold scale (all thresholds scaled together)
    let sweep_modes: Vec<Mode> = sc.modes.iter().copied().filter(|m| *m != Mode::M0).collect();
    let mut csv = Csv::new(&["threshold_scale", "mode", "reduction_pct"]);
    for &scale in &sc.threshold_scales {
        let th = sc.thresholds.scaled(scale);
        for (mode, per_dev) in run_all_modes(&series, &models.chosen, &th, &sweep_modes)? {
            let red: Vec<f64> = per_dev.iter().map(|(l, _)| reduction_pct(l)).collect::<Result<_, _>>()?;
            csv.row([f(scale, 4), mode.name().to_owned(), f(mean(&red), 4)]);
        }
    }
    out.file("reduction_vs_threshold.csv", csv.finish());
    Ok(out)
}

pub fn traffic(sc: &Scenario) -> anyhow::Result<Outputs> {
    let series = load_series(sc)?;
    let models = train_models(sc, &series)?;
    let runs = run_all_modes(&series, &models.chosen, &sc.thresholds, &sc.modes)?;
    let mut out = Outputs::default();
    let crit_note = format!("reject when KS > {KS_CRITICAL_5PCT}/sqrt(n)");
    let mut t = Table::new(
        format!("Inter-transmission times vs exponential ({crit_note})"),
        &["mode", "device", "n", "mean_s", "sd_s", "rate_per_s", "ks", "critical", "reject_5pct"],
    );
    for (mode, per_dev) in &runs {
        let logs: Vec<TransmissionLog> = per_dev.iter().map(|(l, _)| l.clone()).collect();
        let Ok(set) = pooled_inter_arrivals(&logs) else {
            t.row(vec![mode.name().into(), "all".into(), "0".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into()]);
            continue;
        };
        let mut rows = vec![("all".to_owned(), set.gaps)];
        if sc.traffic.per_device {
            for l in &logs {
                if let Ok(g) = inter_arrivals(l) {
                    rows.push((l.device_id.clone(), g.gaps));
                }
            }
        }
        for (i, (who, gaps)) in rows.iter().enumerate() {
            let fit = fit_exponential(gaps)?;
            t.row(vec![
                mode.name().into(),
                who.clone(),
                fit.n.to_string(),
                f(fit.mean, 2),
                f(fit.std_dev, 2),
                f(fit.rate, 6),
                f(fit.ks_statistic, 4),
                f(KS_CRITICAL_5PCT / (fit.n as f64).sqrt(), 4),
                fit.reject_at_5pct.to_string(),
            ]);
            if i == 0 {
                out.note("traffic", &format!("{}_ks", mode.name()), f(fit.ks_statistic, 4));
                let mut csv = Csv::new(&["gap_s", "density", "exp_density"]);
                for b in pdf_export(gaps, sc.traffic.bin_width)? {
                    csv.row([f(b.center, 2), format!("{:.6e}", b.density), format!("{:.6e}", b.exp_density)]);
                }
                out.file(&format!("traffic_pdf_{}.csv", mode.name()), csv.finish());
            }
        }
    }
    out.table("traffic.txt", t);
    Ok(out)
}

pub fn collision(sc: &Scenario) -> anyhow::Result<Outputs> {
    let c = &sc.collision;
    let approx = RachConfig { exact_reattempts: false, ..sc.rach };
    let exact = RachConfig { exact_reattempts: true, ..sc.rach };
    let mut out = Outputs::default();
    let mut csv = Csv::new(&["n", "p_coll_approx", "p_coll_exact", "n_coll_approx", "n_coll_exact"]);
    for n in 0..=c.n_max {
        let n = n as f64;
        csv.row([
            n.to_string(),
            f(p_collision(n, &approx)?, 6),
            f(p_collision(n, &exact)?, 6),
            f(expected_reattempts(n, sc.rach.m_rao, false)?, 6),
            f(expected_reattempts(n, sc.rach.m_rao, true)?, 6),
        ]);
    }
    out.file("collision_analytic.csv", csv.finish());

    let seed = derive_seed(sc.seed, "collision");
    let mut t = Table::new(
        format!("NPRACH collisions, m = {}, P_BO = {}, {} trials", sc.rach.m_rao, sc.rach.p_bo, c.trials),
        &["n", "p_approx", "sim_lockstep_retry", "first_exact", "sim_first", "half_width", "sim_overall"],
    );
    let mut sim_csv = Csv::new(&["n", "p_approx", "sim_lockstep_retry", "first_exact", "sim_first", "half_width", "sim_overall"]);
    for (i, &n) in c.sim_points.iter().enumerate() {
        let stats = simulate_rach(ArrivalProcess::Batch(n), &sc.rach, c.trials, seed.wrapping_add(i as u64))?;
        let first = stats.by_attempt.first();
        // zero backoff: everyone who collided retries in the next RAO together
        let lockstep = RachConfig { backoff_base: 0, max_attempts: 2, ..sc.rach };
        let ls = simulate_rach(ArrivalProcess::Batch(n), &lockstep, c.trials, seed.wrapping_add(1000 + i as u64))?;
        let retry = ls.by_attempt.get(1).map_or("-".into(), |a| f(a.p_coll, 4));
        let cells = vec![
            n.to_string(),
            f(p_collision(n as f64, &sc.rach)?, 4),
            retry,
            f(first_attempt_collision(n as u64, sc.rach.m_rao), 4),
            first.map_or("-".into(), |a| f(a.p_coll, 4)),
            first.map_or("-".into(), |a| f(a.half_width, 4)),
            f(stats.p_coll, 4),
        ];
        sim_csv.row(cells.iter());
        t.row(cells);
    }
    out.file("collision_sim.csv", sim_csv.finish());
    out.table("collision.txt", t);
    for (label, cfg) in [("approx", &approx), ("exact", &exact)] {
        let v = match capacity_at_target(c.target, cfg) {
            Ok(n) => n.to_string(),
            Err(e) => format!("unreachable ({e})"),
        };
        out.note("collision", &format!("capacity_at_{}_{label}", c.target), v);
    }
    Ok(out)
}

pub fn linkbudget(sc: &Scenario) -> anyhow::Result<Outputs> {
    let rows = table3_report(&sc.orbit)?;
    let mut out = Outputs::default();
    let mut t = Table::new(
        "Uplink link budget",
        &["set", "elevation_deg", "beam", "slant_km", "fspl_db", "snr_3.75khz_db", "snr_180khz_db"],
    );
    let mut csv = Csv::new(&[
        "set", "elevation_deg", "beam", "bandwidth_hz", "slant_km", "eirp", "g_over_t", "boltzmann", "path_loss",
        "atmospheric_loss", "shadow_margin", "scintillation_loss", "polarization_loss", "additional_losses",
        "bandwidth_db", "snr_db",
    ]);
    for r in &rows {
        let beam = if r.beam_edge { "edge" } else { "centre" };
        t.row(vec![
            r.set.name().into(),
            f(r.elevation, 0),
            beam.into(),
            f(r.slant_range_km, 1),
            f(r.single_tone.path_loss, 2),
            f(r.single_tone.snr, 2),
            f(r.multi_tone.snr, 2),
        ]);
        for (bw, b) in [(3750.0, &r.single_tone), (180_000.0, &r.multi_tone)] {
            let mut cells = vec![r.set.name().to_owned(), f(r.elevation, 0), beam.into(), f(bw, 0), f(r.slant_range_km, 3)];
            cells.extend(b.signed_terms().iter().map(|(_, v)| f(v.abs(), 4)));
            cells.push(f(b.snr, 4));
            csv.row(cells);
        }
        out.note(
            "linkbudget",
            &format!("{}_{}deg_snr_3.75k_180k", r.set.name(), r.elevation),
            format!("{} / {}", f(r.single_tone.snr, 2), f(r.multi_tone.snr, 2)),
        );
    }
    out.table("linkbudget.txt", t);
    out.file("linkbudget.csv", csv.finish());

    let p = preset(sc.radio.preset);
    let mut pt = Table::new(format!("Preset {}", p.set.name()), &["parameter", "value"]);
    for (k, v) in [
        ("beam_centre_elevation_deg", p.beam_center_elevation),
        ("beam_edge_elevation_deg", p.beam_edge_elevation),
        ("beamwidth_3db_deg", p.beamwidth_3db),
        ("eirp_density_dbw_per_mhz", p.eirp_density),
        ("g_over_t_db_per_k", p.g_over_t),
        ("ul_eirp_dbw", p.radio.eirp),
    ] {
        pt.row(vec![k.into(), f(v, 4)]);
    }
    let zenith = fspl(p.radio.frequency, slant_range(90.0, &sc.orbit)? * 1e3)?;
    pt.row(vec!["fspl_zenith_db".into(), f(zenith, 2)]);
    out.table("preset.txt", pt);
    Ok(out)
}

pub fn visibility(sc: &Scenario) -> anyhow::Result<Outputs> {
    let v = &sc.visibility;
    let mut out = Outputs::default();
    let mut csv = Csv::new(&["altitude_km", "mask_deg", "max_elevation_deg", "duration_s"]);
    for &h in &v.altitudes {
        let g = OrbitGeometry { altitude: h, ..sc.orbit };
        for &mask in &v.masks {
            let mut e = mask;
            loop {
                let d = visibility_duration(&PassSpec { mask, max_elevation: e }, &g)?;
                csv.row([f(h, 1), f(mask, 2), f(e, 2), f(d, 3)]);
                if e >= 90.0 {
                    break;
                }
                e = (e + v.elevation_step).min(90.0);
            }
        }
    }
    out.file("visibility.csv", csv.finish());
    let mut t = Table::new(
        format!("Visibility, h = {} km, inclination {} deg", sc.orbit.altitude, sc.orbit.inclination),
        &["mask_deg", "max_elevation_deg", "duration_s", "duration_min"],
    );
    for mask in [0.0, 10.0, 20.0, 30.0] {
        let d = visibility_duration(&PassSpec { mask, max_elevation: 90.0 }, &sc.orbit)?;
        t.row(vec![f(mask, 0), "90".into(), f(d, 1), f(d / 60.0, 2)]);
        out.note("visibility", &format!("mask_{mask}_s"), f(d, 1));
    }
    out.note("visibility", "period_min", f(sc.orbit.period() / 60.0, 2));
    out.table("visibility.txt", t);
    Ok(out)
}

pub fn effective(sc: &Scenario) -> anyhow::Result<Outputs> {
    let e = &sc.effective_data;
    let mut out = Outputs::default();
    let mut csv = Csv::new(&["visibility_s", "series", "bytes"]);
    let steps = (e.max_visibility / e.step).floor() as u64;
    for i in 0..=steps {
        let t = i as f64 * e.step;
        for s in &e.series {
            csv.row([f(t, 1), s.label.clone(), f(effective_data(t, e.aggregate_rate, s.reduction)?, 1)]);
        }
    }
    out.file("effective_data.csv", csv.finish());
    let mut t = Table::new(
        format!("Effective data at {} bit/s", e.aggregate_rate),
        &["series", "reduction", "bytes_60s", "bytes_max_visibility"],
    );
    for s in &e.series {
        let b60 = effective_data(60.0, e.aggregate_rate, s.reduction)?;
        t.row(vec![s.label.clone(), f(s.reduction, 4), f(b60, 0), f(effective_data(e.max_visibility, e.aggregate_rate, s.reduction)?, 0)]);
        out.note("effective-data", &format!("{}_bytes_60s", s.label), f(b60, 0));
    }
    out.table("effective_data.txt", t);
    Ok(out)
}

pub fn lifetime(sc: &Scenario) -> anyhow::Result<Outputs> {
    let en = &sc.energy;
    let modes = default_modes(en.reductions);
    let grid = table7_report(&modes, &en.inter_pass_hours, &en.duty, &en.profile, en.battery_mwh)?;
    let mut out = Outputs::default();

    let mut headers = vec!["mode".to_owned(), "payload_b".to_owned()];
    headers.extend(en.inter_pass_hours.iter().map(|h| format!("{}h", f(*h, 0))));
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut t = Table::new(format!("Battery lifetime in years ({} mWh)", en.battery_mwh), &header_refs);
    let mut csv = Csv::new(&["mode", "payload_b", "inter_pass_h", "events_per_pass", "lifetime_years", "average_power_mw"]);
    let mut breakdown = Csv::new(&["mode", "inter_pass_h", "gnss", "rx", "tx", "idle", "overhead", "sleep", "total_mws"]);
    for (mi, m) in modes.iter().enumerate() {
        let mut cells = vec![m.label.clone(), m.payload.to_string()];
        for (hi, h) in en.inter_pass_hours.iter().enumerate() {
            let cell = &grid[mi * en.inter_pass_hours.len() + hi];
            let b = cell.estimate.breakdown;
            cells.push(f(cell.estimate.lifetime_years, 3));
            csv.row([
                m.label.clone(),
                m.payload.to_string(),
                f(*h, 2),
                f((1.0 - m.reduction) * en.duty.slots_per_pass(), 4),
                f(cell.estimate.lifetime_years, 4),
                f(cell.estimate.average_power_mw, 6),
            ]);
            breakdown.row(
                [m.label.clone(), f(*h, 2)]
                    .into_iter()
                    .chain([b.gnss, b.rx, b.tx, b.idle, b.overhead, b.sleep, b.total()].map(|v| f(v, 4))),
            );
        }
        t.row(cells);
    }
    out.table("lifetime.txt", t);
    out.file("lifetime.csv", csv.finish());
    out.file("energy_breakdown.csv", breakdown.finish());
    for payload in [FULL_PAYLOAD, REDUCED_PAYLOAD] {
        out.note("lifetime", &format!("event_energy_{payload}b_mws"), f(per_event_energy(payload, &en.profile)?, 4));
    }
    Ok(out)
}
