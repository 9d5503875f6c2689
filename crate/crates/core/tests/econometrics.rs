use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use textspread_core::econometrics::{
    bartlett_weights, default_lags, lag, nabla, norm_cdf, norm_inv_cdf, ols_nw, probit_nw, recession_starts, recession_window,
    RecessionRule,
};
use textspread_core::{Frequency, Month, TimeSeries, TransformKind};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("x{i}")).collect()
}

const X5: [[f64; 2]; 5] = [[1.0, 1.0], [1.0, 2.0], [1.0, 4.0], [1.0, 3.0], [1.0, 7.0]];
const Y5: [f64; 5] = [2.0, 1.0, 5.0, 3.0, 6.0];

fn inv2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `(X'X)^-1 (sum_t g_t g_t' + sum_l w_l sum_t (g_t g_{t-l}' + g_{t-l} g_t')) (X'X)^-1`
/// written out with scalar loops.
fn manual_hac(lags: usize) -> [[f64; 2]; 2] {
    let mut xtx = [[0.0; 2]; 2];
    let mut xty = [0.0; 2];
    for (x, y) in X5.iter().zip(Y5) {
        for i in 0..2 {
            xty[i] += x[i] * y;
            for j in 0..2 {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    let b = inv2(xtx);
    let beta = [b[0][0] * xty[0] + b[0][1] * xty[1], b[1][0] * xty[0] + b[1][1] * xty[1]];
    let g: Vec<[f64; 2]> = X5
        .iter()
        .zip(Y5)
        .map(|(x, y)| {
            let e = y - beta[0] * x[0] - beta[1] * x[1];
            [x[0] * e, x[1] * e]
        })
        .collect();
    let mut s = [[0.0; 2]; 2];
    for l in 0..=lags {
        let w = if l == 0 { 1.0 } else { 1.0 - l as f64 / (lags as f64 + 1.0) };
        for t in l..5 {
            for i in 0..2 {
                for j in 0..2 {
                    let v = g[t][i] * g[t - l][j];
                    if l == 0 {
                        s[i][j] += v;
                    } else {
                        s[i][j] += w * (v + g[t - l][i] * g[t][j]);
                    }
                }
            }
        }
    }
    mul2(mul2(b, s), b)
}

fn fit5(lags: usize) -> Vec<f64> {
    let x: Vec<f64> = X5.iter().flatten().copied().collect();
    ols_nw(&x, 2, &Y5, &names(2), lags).unwrap().cov
}

#[test]
fn hac_matches_manual_bartlett_sum() {
    for lags in 0..4 {
        let m = manual_hac(lags);
        let cov = fit5(lags);
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov[i * 2 + j] - m[i][j]).abs() < 1e-12, "L={lags} ({i},{j}): {} vs {}", cov[i * 2 + j], m[i][j]);
            }
        }
    }
}

#[test]
fn zero_lags_is_hc0() {
    let cov = fit5(0);
    let m = manual_hac(0);
    for (c, v) in cov.iter().zip([m[0][0], m[0][1], m[1][0], m[1][1]]) {
        assert!((c - v).abs() <= 1e-14 * v.abs().max(1.0));
    }
}

#[test]
fn bartlett_weights_and_lag_rule() {
    assert_eq!(bartlett_weights(3), [0.75, 0.5, 0.25]);
    assert_eq!(default_lags(100), 3);
    assert_eq!(default_lags(255), 3);
    assert_eq!(default_lags(256), 4);
}

#[test]
fn probit_intercept_only_equals_inverse_normal() {
    for (n1, n) in [(3, 10), (17, 40), (50, 51), (1, 200)] {
        let y: Vec<f64> = (0..n).map(|i| if i < n1 { 1.0 } else { 0.0 }).collect();
        let x = vec![1.0; n];
        let fit = probit_nw(&x, 1, &y, &names(1), 0).unwrap();
        let want = norm_inv_cdf(n1 as f64 / n as f64);
        assert!((fit.coef[0] - want).abs() < 1e-10, "{n1}/{n}: {} vs {want}", fit.coef[0]);
    }
}

fn probit_fixture(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..30 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.gen();
        x.extend([1.0, a, b]);
        y.push(if u < norm_cdf(-0.2 + 0.8 * a - 0.5 * b) { 1.0 } else { 0.0 });
    }
    (x, y)
}

fn probit_ll(x: &[f64], y: &[f64], b: &[f64; 3]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let eta = b[0] * x[3 * i] + b[1] * x[3 * i + 1] + b[2] * x[3 * i + 2];
            let p = norm_cdf(eta);
            if *yi == 1.0 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Coordinate grid search with a shrinking step down to below 1e-6.
fn grid_oracle(x: &[f64], y: &[f64]) -> [f64; 3] {
    let mut b = [0.0; 3];
    let mut best = probit_ll(x, y, &b);
    let mut step = 0.5;
    while step > 1e-7 {
        let mut improved = true;
        while improved {
            improved = false;
            for k in 0..3 {
                for d in -10..=10 {
                    let mut c = b;
                    c[k] += d as f64 * step;
                    let ll = probit_ll(x, y, &c);
                    if ll > best + 1e-15 {
                        best = ll;
                        b = c;
                        improved = true;
                    }
                }
            }
        }
        step /= 4.0;
    }
    b
}

#[test]
fn probit_matches_grid_oracle_with_monotone_likelihood() {
    let mut checked = 0;
    for seed in 0..8 {
        let (x, y) = probit_fixture(seed);
        let Ok(fit) = probit_nw(&x, 3, &y, &names(3), 2) else {
            continue;
        };
        let oracle = grid_oracle(&x, &y);
        for (c, o) in fit.coef.iter().zip(oracle) {
            assert!((c - o).abs() < 1e-4, "seed {seed}: {c} vs {o}");
        }
        assert!(fit.loglik_path.windows(2).all(|w| w[1] >= w[0]));
        assert!((fit.loglik - probit_ll(&x, &y, &[fit.coef[0], fit.coef[1], fit.coef[2]])).abs() < 1e-9);
        checked += 1;
    }
    assert!(checked >= 6);
}

fn monthly(kind: TransformKind, vals: &[f64]) -> TimeSeries {
    let m0 = Month::new(2000, 1);
    let obs = vals.iter().enumerate().map(|(i, v)| (m0.offset(i as i32), *v)).collect();
    TimeSeries::new("y", Frequency::Monthly, kind, obs).unwrap()
}

#[test]
fn growth_transforms() {
    let s = monthly(TransformKind::LogDifference, &[100.0, 104.0, 107.0, 108.0, 110.0]);
    let g = nabla(&s, 3, 1200.0).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g.first_month(), Some(Month::new(2000, 2)));
    assert!((g.observations()[0].1 - 300.0 * 1.1f64.ln()).abs() < 1e-12);

    let flat = nabla(&monthly(TransformKind::LogDifference, &[5.0; 20]), 6, 1200.0).unwrap();
    assert!(flat.observations().iter().all(|o| o.1 == 0.0));

    let u = monthly(TransformKind::ArithmeticDifference, &[4.0, 4.5, 5.0, 5.5, 6.0]);
    let g = nabla(&u, 3, 1200.0).unwrap();
    assert!((g.observations()[0].1 - 300.0 * 2.0 / 100.0).abs() < 1e-12);

    assert!(nabla(&monthly(TransformKind::Level, &[1.0; 5]), 1, 1200.0).is_err());
}

#[test]
fn lags_and_recession_windows() {
    let s = monthly(TransformKind::Level, &[1.0, 2.0, 3.0]);
    let l = lag(&s, 2);
    assert_eq!(l.get(Month::new(2000, 3)), Some(1.0));

    let nber = monthly(TransformKind::Level, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    let any = recession_window(&nber, 2, RecessionRule::Any).unwrap();
    assert_eq!(any.observations().iter().map(|o| o.1).collect::<Vec<_>>(), [1.0, 1.0, 1.0, 1.0, 1.0]);
    let end = recession_window(&nber, 2, RecessionRule::EndOnly).unwrap();
    assert_eq!(end.observations().iter().map(|o| o.1).collect::<Vec<_>>(), [1.0, 1.0, 0.0, 0.0, 1.0]);
    assert_eq!(recession_starts(&nber), [Month::new(2000, 3), Month::new(2000, 7)]);
}
