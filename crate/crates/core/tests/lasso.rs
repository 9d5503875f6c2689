use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use textspread_core::lasso::{fit_lasso, lambda_grid, LassoConfig, LassoDesign, PenaltyRule};

/// Columns centered, mutually orthogonal and scaled to `x'x = T`.
fn orthonormal(seed: u64, t: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for _ in 0..n {
        let mut v: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
        let m = v.iter().sum::<f64>() / t as f64;
        v.iter_mut().for_each(|x| *x -= m);
        for _ in 0..2 {
            for q in &cols {
                let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / t as f64;
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let s = (v.iter().map(|x| x * x).sum::<f64>() / t as f64).sqrt();
        v.iter_mut().for_each(|x| *x /= s);
        cols.push(v);
    }
    let x: Vec<f64> = (0..t).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
    let y: Vec<f64> = (0..t)
        .map(|i| 1.5 + 0.8 * cols[0][i] - 0.5 * cols[1][i] + 0.2 * cols[2][i] + 0.7 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

fn soft(z: f64, l: f64) -> f64 {
    z.signum() * (z.abs() - l).max(0.0)
}

fn oracle(x: &[f64], n: usize, y: &[f64], lambda: f64) -> Vec<f64> {
    let t = y.len() as f64;
    (0..n)
        .map(|j| soft(y.iter().enumerate().map(|(i, v)| x[i * n + j] * v).sum::<f64>() / t, lambda))
        .collect()
}

#[test]
fn orthonormal_designs_match_soft_threshold() {
    for seed in 0..20 {
        let (x, y) = orthonormal(seed, 200, 20);
        for lambda in [0.0, 0.01, 0.1, 0.3, 2.0] {
            let fit = fit_lasso(&x, 20, &y, &LassoConfig::fixed(lambda)).unwrap();
            for (w, o) in fit.weights.iter().zip(oracle(&x, 20, &y, lambda)) {
                assert!((w - o).abs() < 1e-8, "seed {seed} lambda {lambda}: {w} vs {o}");
            }
            assert!(fit.kkt_violation(&x, 20, &y) < 1e-8);
        }
    }
}

#[test]
fn cross_validated_fit_matches_oracle_at_its_penalty() {
    let (x, y) = orthonormal(99, 200, 20);
    let fit = fit_lasso(&x, 20, &y, &LassoConfig::default()).unwrap();
    assert_eq!(fit.lambda, fit.lambda_cv.unwrap() + 1e-5);
    for (w, o) in fit.weights.iter().zip(oracle(&x, 20, &y, fit.lambda)) {
        assert!((w - o).abs() < 1e-8);
    }
}

#[test]
fn grid_is_log_spaced_from_lambda_max() {
    let g = lambda_grid(2.0, &LassoConfig::default());
    assert_eq!(g.len(), 100);
    assert_eq!(g[0], 2.0);
    assert!((g[99] - 2e-4).abs() < 1e-15);
    let r = g[1] / g[0];
    assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
}

#[test]
fn penalty_rules() {
    let (x, y) = orthonormal(5, 120, 6);
    let cv = fit_lasso(
        &x,
        6,
        &y,
        &LassoConfig {
            penalty: PenaltyRule::Cv,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(Some(cv.lambda), cv.lambda_cv);
    let fixed = fit_lasso(&x, 6, &y, &LassoConfig::fixed(0.05)).unwrap();
    assert_eq!(fixed.lambda, 0.05);
    assert_eq!(fixed.lambda_cv, None);
}

#[test]
fn full_grid_and_early_stop_agree_on_a_clear_minimum() {
    let (x, y) = orthonormal(8, 200, 20);
    let full = fit_lasso(
        &x,
        20,
        &y,
        &LassoConfig {
            cv_patience: 0,
            ..Default::default()
        },
    )
    .unwrap();
    let early = fit_lasso(&x, 20, &y, &LassoConfig::default()).unwrap();
    assert_eq!(full.lambda, early.lambda);
}

#[test]
fn warm_sequence_equals_cold_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (t, p) = (150, 30);
    let x: Vec<f64> = (0..t * p).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = (0..t).map(|i| 3.0 * x[i * p] - 2.0 * x[i * p + 4] + 0.3 * rng.gen_range(-1.0..1.0)).collect();
    let design = LassoDesign::new(x, p, y).unwrap();
    let counts = [100, 110, 125, 150];
    let cfg = LassoConfig {
        tol: 1e-12,
        cv_tol: 1e-12,
        cv_patience: 0,
        ..Default::default()
    };
    let seq = design.fit_sequence(&counts, &cfg).unwrap();
    for (n, warm) in counts.iter().zip(&seq) {
        let cold = design.fit_first(*n, &cfg).unwrap();
        assert_eq!(warm.selected, cold.selected, "n={n}");
        assert!((warm.lambda - cold.lambda).abs() < 1e-12 * cold.lambda);
        for (a, b) in warm.weights.iter().zip(&cold.weights) {
            assert!((a - b).abs() < 1e-7 * b.abs().max(1.0), "n={n}: {a} vs {b}");
        }
    }
}
