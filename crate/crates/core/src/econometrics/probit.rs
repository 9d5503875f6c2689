use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::erf::erfc;

use super::hac::{long_run_covariance, sandwich};
use super::ols::{check_rank, design};
use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_inv_cdf(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Asymptotic series `1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8` for `Phi(x) (-x) / phi(x)`.
fn tail_series(x: f64) -> f64 {
    let z = 1.0 / (x * x);
    1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)))
}

/// `ln Phi(x)`, finite for all finite `x`.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-0.5 * erfc(x / std::f64::consts::SQRT_2)).ln_1p()
    } else if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        -0.5 * x * x - (FRAC_1_SQRT_2PI / -x).recip().ln() + tail_series(x).ln()
    }
}

/// Inverse Mills ratio `phi(x)/Phi(x)`, using the asymptotic expansion deep
/// in the lower tail.
pub fn inv_mills(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        -x / tail_series(x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbitFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    /// Row-major `p x p` HAC covariance.
    pub cov: Vec<f64>,
    pub loglik: f64,
    pub loglik_null: f64,
    /// McFadden: `1 - ll / ll_null`.
    pub pseudo_r2: f64,
    pub n_obs: usize,
    pub nw_lags: usize,
    pub iterations: usize,
    /// Log-likelihood after each accepted step, starting value first.
    pub loglik_path: Vec<f64>,
    pub index: Vec<f64>,
}

fn loglik(q: &[f64], eta: &DVector<f64>) -> f64 {
    q.iter().zip(eta.iter()).map(|(qi, e)| log_norm_cdf(qi * e)).sum()
}

fn separated(x: &DMatrix<f64>, y: &[f64]) -> bool {
    for j in 0..x.ncols() {
        let col = x.column(j);
        let (mut lo1, mut hi1, mut lo0, mut hi0) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (v, yi) in col.iter().zip(y) {
            if *yi == 1.0 {
                lo1 = lo1.min(*v);
                hi1 = hi1.max(*v);
            } else {
                lo0 = lo0.min(*v);
                hi0 = hi0.max(*v);
            }
        }
        let constant = lo1 == hi1 && lo0 == hi0 && lo1 == lo0;
        if !constant && (hi0 <= lo1 || hi1 <= lo0) {
            return true;
        }
    }
    false
}

/// Probit maximum likelihood by Newton-Raphson with step halving, and
/// Newey-West score-sandwich standard errors.
pub fn probit_nw(x: &[f64], p: usize, y: &[f64], names: &[String], nw_lags: usize) -> Result<ProbitFit> {
    const MAX_ITER: usize = 200;
    let n = y.len();
    let xm = design(x, p, y, names)?;
    if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Validation(format!("probit response must be 0/1, found {v}")));
    }
    check_rank(&xm, names)?;
    let n1 = y.iter().filter(|v| **v == 1.0).count();
    if n1 == 0 || n1 == n || separated(&xm, y) {
        return Err(Error::PerfectSeparation);
    }
    let q: Vec<f64> = y.iter().map(|v| 2.0 * v - 1.0).collect();
    let phat = n1 as f64 / n as f64;
    let loglik_null = n1 as f64 * phat.ln() + (n - n1) as f64 * (1.0 - phat).ln();

    let mut beta = DVector::zeros(p);
    if let Some(c) = (0..p).find(|&j| xm.column(j).iter().all(|v| *v == 1.0)) {
        beta[c] = norm_inv_cdf(phat);
    }
    let mut eta = &xm * &beta;
    let mut ll = loglik(&q, &eta);
    let mut path = vec![ll];
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let lam: Vec<f64> = q.iter().zip(eta.iter()).map(|(qi, e)| qi * inv_mills(qi * e)).collect();
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let xi = xm.row(i).transpose();
            grad.axpy(lam[i], &xi, 1.0);
            let w = lam[i] * (lam[i] + eta[i]);
            info.ger(w, &xi, &xi, 1.0);
        }
        grad_norm = grad.amax();
        if grad_norm < 1e-10 * n as f64 {
            break;
        }
        if iterations == MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                gradient_norm: grad.norm(),
            });
        }
        iterations += 1;
        let Some(chol) = info.clone().cholesky() else {
            return Err(Error::PerfectSeparation);
        };
        let delta = chol.solve(&grad);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &beta + &delta * step;
            let cand_eta = &xm * &cand;
            let cand_ll = loglik(&q, &cand_eta);
            if cand_ll >= ll {
                accepted = cand_ll > ll || delta.amax() * step < 1e-14;
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                break;
            }
            step *= 0.5;
        }
        path.push(ll);
        if beta.amax() > 1e6 || ll > -1e-9 {
            return Err(Error::PerfectSeparation);
        }
        if !accepted || delta.amax() * step < 1e-13 {
            break;
        }
    }
    let _ = grad_norm;

    // Sandwich at the optimum.
    let lam: Vec<f64> = q.iter().zip(eta.iter()).map(|(qi, e)| qi * inv_mills(qi * e)).collect();
    let mut info = DMatrix::zeros(p, p);
    let mut scores = xm.clone();
    for i in 0..n {
        let xi = xm.row(i).transpose();
        info.ger(lam[i] * (lam[i] + eta[i]), &xi, &xi, 1.0);
        scores.row_mut(i).scale_mut(lam[i]);
    }
    let bread = info.try_inverse().ok_or(Error::PerfectSeparation)?;
    let bread = (&bread + bread.transpose()) * 0.5;
    let meat = long_run_covariance(&scores, nw_lags);
    let cov = sandwich(&bread, &meat, n);
    Ok(ProbitFit {
        names: names.to_vec(),
        coef: beta.iter().copied().collect(),
        se: (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect(),
        cov: cov.transpose().iter().copied().collect(),
        loglik: ll,
        loglik_null,
        pseudo_r2: 1.0 - ll / loglik_null,
        n_obs: n,
        nw_lags,
        iterations,
        loglik_path: path,
        index: eta.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mills_is_continuous_at_switch() {
        let a = inv_mills(-30.0 + 1e-9);
        let b = inv_mills(-30.0);
        assert!((a - b).abs() / b < 1e-9, "{a} {b}");
        let a = log_norm_cdf(-30.0 + 1e-9);
        let b = log_norm_cdf(-30.0);
        assert!((a - b).abs() / b.abs() < 1e-9, "{a} {b}");
        assert!(inv_mills(-1e4).is_finite());
        assert!(log_norm_cdf(-1e4).is_finite());
        assert!((log_norm_cdf(0.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn intercept_only() {
        let y: Vec<f64> = (0..40).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let x = vec![1.0; 40];
        let f = probit_nw(&x, 1, &y, &["const".into()], 0).unwrap();
        assert!((f.coef[0] - norm_inv_cdf(0.25)).abs() < 1e-10);
        assert!(f.pseudo_r2.abs() < 1e-12);
    }

    #[test]
    fn separation() {
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let x: Vec<f64> = (0..20).flat_map(|i| [1.0, i as f64]).collect();
        assert!(matches!(probit_nw(&x, 2, &y, &["c".into(), "x".into()], 0), Err(Error::PerfectSeparation)));
        let x = vec![1.0; 20];
        assert!(matches!(probit_nw(&x, 1, &vec![1.0; 20], &["c".into()], 0), Err(Error::PerfectSeparation)));
    }

    #[test]
    fn loglik_path_monotone() {
        let y: Vec<f64> = (0..60).map(|i| if (i * 7) % 11 < 4 { 1.0 } else { 0.0 }).collect();
        let x: Vec<f64> = (0..60).flat_map(|i| [1.0, ((i * 13) % 17) as f64 / 17.0 + if (i * 7) % 11 < 4 { 0.3 } else { 0.0 }]).collect();
        let f = probit_nw(&x, 2, &y, &["c".into(), "x".into()], 3).unwrap();
        assert!(f.loglik_path.windows(2).all(|w| w[1] >= w[0]));
        assert!(f.coef[1] > 0.0);
    }
}
