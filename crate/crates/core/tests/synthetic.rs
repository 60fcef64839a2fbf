use leoiot_core::timeseries::{
    generate_synthetic, preprocess, read_csv, resample_and_interpolate, write_csv, Param, SyntheticConfig,
};

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn pm_fractions_are_correlated_over_a_month() {
    let cfg = SyntheticConfig { n_devices: 3, duration: 30 * 86_400, ..Default::default() };
    for s in generate_synthetic(&cfg).unwrap() {
        let r = pearson(&s.column(Param::Pm25), &s.column(Param::Pm10));
        assert!(r > 0.9, "{}: r = {r}", s.device_id);
    }
}

#[test]
fn grid_is_uniform_and_reproducible() {
    let cfg = SyntheticConfig { n_devices: 2, duration: 86_400, ..Default::default() };
    let a = generate_synthetic(&cfg).unwrap();
    assert_eq!(a, generate_synthetic(&cfg).unwrap());
    for s in &a {
        assert_eq!(s.len(), 2880);
        for i in 1..s.len() {
            assert_eq!(s.time_at(i) - s.time_at(i - 1), 30);
        }
    }
}

#[test]
fn csv_roundtrip_through_preprocess() {
    let cfg = SyntheticConfig { n_devices: 2, duration: 6 * 3600, ..Default::default() };
    let data = generate_synthetic(&cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&data, &mut buf).unwrap();
    let ingested = read_csv(buf.as_slice()).unwrap();
    assert!(ingested.rejected.is_empty());
    // six hours out of a month is far too sparse to survive preprocessing
    assert!(preprocess(&ingested.records, 30, 1).unwrap().is_empty());
    for a in &data {
        let recs: Vec<_> = ingested.records.iter().filter(|r| r.device_id == a.device_id).cloned().collect();
        let b = resample_and_interpolate(&recs, 30).unwrap();
        assert_eq!(a.start_time, b.start_time);
        assert_eq!(a.len(), b.len());
        for p in Param::ALL {
            for (x, y) in a.column(p).iter().zip(b.column(p)) {
                assert!((x - y).abs() < 1e-4);
            }
        }
    }
}
