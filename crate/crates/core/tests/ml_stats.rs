use leoiot_core::mlpredict::{chronological_split, evaluate, fit_forest, fit_ols, fit_tree, ForestParams, TreeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SLOPE: f64 = 0.45;

fn linear_data(seed: u64, n: usize, noise: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Normal::new(0.0, noise).unwrap();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..400.0)).collect();
    let y = x.iter().map(|&v| SLOPE * v + 3.0 + eps.sample(&mut rng)).collect();
    (x, y)
}

#[test]
fn ols_recovers_slope() {
    for seed in 0..10 {
        let (x, y) = linear_data(seed, 2000, 5.0);
        let ((xt, yt), (xv, yv)) = chronological_split(&x, &y, 0.8);
        let m = fit_ols(xt, yt).unwrap();
        let se = m.slope_standard_error(xt, yt);
        assert!((m.slope - SLOPE).abs() <= 3.0 * se, "seed {seed}: {} ± {se}", m.slope);
        assert!(evaluate(&m, xv, yv).unwrap().r_squared.unwrap() > 0.95);
    }
}

#[test]
fn forest_beats_single_tree() {
    let runs = 20;
    let mut wins = 0;
    for seed in 0..runs {
        let (x, y) = linear_data(100 + seed, 1500, 8.0);
        let ((xt, yt), (xv, yv)) = chronological_split(&x, &y, 0.8);
        let tree = fit_tree(xt, yt, TreeParams::default()).unwrap();
        let forest = fit_forest(xt, yt, ForestParams { seed, ..Default::default() }).unwrap();
        let (t, f) = (evaluate(&tree, xv, yv).unwrap().rmse, evaluate(&forest, xv, yv).unwrap().rmse);
        if f <= t {
            wins += 1;
        }
    }
    assert!(wins as f64 >= 0.95 * runs as f64, "forest won {wins}/{runs}");
}

#[test]
fn forest_independent_of_thread_count() {
    let (x, y) = linear_data(5, 500, 4.0);
    let params = ForestParams { n_estimators: 30, seed: 9, ..Default::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| fit_forest(&x, &y, params).unwrap());
    let b = four.install(|| fit_forest(&x, &y, params).unwrap());
    assert_eq!(a, b);
}
