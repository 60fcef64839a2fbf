use leoiot_core::airquality::BreakpointTable;
use leoiot_core::mlpredict::LinearModel;
use leoiot_core::shewhart::{run_mode, Mode, Threshold};
use leoiot_core::timeseries::{generate_synthetic, SyntheticConfig};
use leoiot_core::traffic::{fit_exponential, pdf_export, pooled_inter_arrivals};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

fn exp_sample(seed: u64, n: usize, rate: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Exp::new(rate).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn exponential_gaps_rarely_rejected() {
    let runs = 100;
    let rejected = (0..runs).filter(|&s| fit_exponential(&exp_sample(s, 10_000, 0.02)).unwrap().reject_at_5pct).count();
    assert!(rejected as f64 <= 0.05 * runs as f64, "rejected {rejected}/{runs}");
}

#[test]
fn histogram_tracks_density() {
    let gaps = exp_sample(1, 10_000, 0.02);
    let bins = pdf_export(&gaps, 10.0).unwrap();
    let peak = bins.iter().map(|b| b.exp_density).fold(0.0, f64::max);
    let worst = bins.iter().map(|b| (b.density - b.exp_density).abs()).fold(0.0, f64::max);
    assert!(worst < 0.1 * peak, "{worst} vs peak {peak}");
}

#[test]
fn shewhart_traffic_is_not_poisson() {
    let data = generate_synthetic(&SyntheticConfig { n_devices: 5, duration: 7 * 86_400, ..Default::default() }).unwrap();
    let table = BreakpointTable::cpcb();
    let predictor = LinearModel { slope: 0.45, intercept: 0.0 };
    for mode in [Mode::M1, Mode::M2, Mode::M3] {
        let logs: Vec<_> = data
            .iter()
            .map(|s| run_mode(s, mode, &Threshold::default(), Some(&predictor), &table).unwrap().0)
            .collect();
        let fit = fit_exponential(&pooled_inter_arrivals(&logs).unwrap().gaps).unwrap();
        assert!(fit.reject_at_5pct, "{mode:?}: KS {} over {} gaps", fit.ks_statistic, fit.n);
    }
}
