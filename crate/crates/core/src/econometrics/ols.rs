use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::hac::{long_run_covariance, sandwich};
use crate::error::{Error, Result};

/// Least-squares fit with Newey-West standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    /// Row-major `p x p` HAC covariance.
    pub cov: Vec<f64>,
    /// Unadjusted, centered.
    pub r2: f64,
    pub n_obs: usize,
    pub nw_lags: usize,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Checks column rank by modified Gram-Schmidt and names the offending
/// columns when the design is deficient.
pub(crate) fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let mut basis: Vec<(usize, DVector<f64>)> = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        let mut v = col.clone();
        let mut involved = Vec::new();
        for (k, q) in &basis {
            let c = q.dot(&v);
            if c.abs() > 1e-8 * norm0.max(f64::MIN_POSITIVE) {
                involved.push(*k);
            }
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            involved.push(j);
            involved.sort_unstable();
            return Err(Error::RankDeficient {
                columns: involved.into_iter().map(|i| names[i].clone()).collect(),
            });
        }
        basis.push((j, v / norm));
    }
    Ok(())
}

pub(crate) fn design(x: &[f64], p: usize, y: &[f64], names: &[String]) -> Result<DMatrix<f64>> {
    let n = y.len();
    if x.len() != n * p || names.len() != p {
        return Err(Error::Validation(format!(
            "design is {} values for {n} rows, {p} columns and {} names",
            x.len(),
            names.len()
        )));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("regression input contains {v}")));
    }
    if n < p {
        return Err(Error::InsufficientData {
            what: "regression".into(),
            needed: p,
            got: n,
        });
    }
    Ok(DMatrix::from_row_slice(n, p, x))
}

/// OLS of `y` on the columns of `x` (row-major `n x p`). Include a constant
/// column explicitly if an intercept is wanted.
///
/// The covariance is `n (X'X)^-1 S (X'X)^-1` with `S` the Bartlett-weighted
/// long-run covariance of `x_t e_t`; `nw_lags = 0` gives HC0.
pub fn ols_nw(x: &[f64], p: usize, y: &[f64], names: &[String], nw_lags: usize) -> Result<OlsFit> {
    let n = y.len();
    let xm = design(x, p, y, names)?;
    check_rank(&xm, names)?;
    let yv = DVector::from_column_slice(y);
    let svd = xm.clone().svd(true, true);
    let beta = svd.solve(&yv, 0.0).map_err(|e| Error::Validation(e.to_string()))?;
    let v_t = svd.v_t.as_ref().expect("computed");
    let inv_sq = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let xtx_inv = v_t.transpose() * inv_sq * v_t;
    let fitted = &xm * &beta;
    let resid = &yv - &fitted;
    let mut scores = xm.clone();
    for (mut row, e) in scores.row_iter_mut().zip(resid.iter()) {
        row *= *e;
    }
    let meat = long_run_covariance(&scores, nw_lags);
    let cov = sandwich(&xtx_inv, &meat, n);
    let ybar = yv.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ssr = resid.norm_squared();
    Ok(OlsFit {
        names: names.to_vec(),
        coef: beta.iter().copied().collect(),
        se: (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect(),
        cov: cov.transpose().iter().copied().collect(),
        r2: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
        n_obs: n,
        nw_lags,
        fitted: fitted.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
    })
}
