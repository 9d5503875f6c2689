use serde::{Deserialize, Serialize};

use crate::econometrics::{norm_cdf, norm_pdf};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Identity,
    Probit,
}

/// `f(x) = link(intercept + w'x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub link: Link,
}

impl LinearModel {
    pub fn index(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let eta = self.index(x);
        match self.link {
            Link::Identity => eta,
            Link::Probit => norm_cdf(eta),
        }
    }
}

/// Per-observation attributions against the sample-mean baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapValues {
    pub n_rows: usize,
    pub n_features: usize,
    /// Row-major `n x p`.
    pub values: Vec<f64>,
    pub means: Vec<f64>,
    /// `f(mean)`.
    pub base: f64,
}

impl ShapValues {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Mean absolute attribution per feature.
    pub fn importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for i in 0..self.n_rows {
            for (a, v) in imp.iter_mut().zip(self.row(i)) {
                *a += v.abs();
            }
        }
        imp.iter_mut().for_each(|a| *a /= self.n_rows as f64);
        imp
    }
}

fn column_means(x: &[f64], p: usize) -> Result<(usize, Vec<f64>)> {
    if p == 0 || x.len() % p != 0 || x.is_empty() {
        return Err(Error::Validation(format!("{} values do not form rows of {p}", x.len())));
    }
    let n = x.len() / p;
    let mut means = vec![0.0; p];
    for row in x.chunks(p) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    Ok((n, means))
}

/// Linear attributions `phi_ij = w_j (x_ij - mean_j)`.
pub fn shap_linear(x: &[f64], p: usize, weights: &[f64]) -> Result<ShapValues> {
    shap_regression(
        &LinearModel {
            intercept: 0.0,
            weights: weights.to_vec(),
            link: Link::Identity,
        },
        x,
        p,
    )
}

/// Attributions for a linear-index model. For the probit link the linear
/// terms of each row are rescaled by `(Phi(eta_i) - Phi(eta_bar)) / (eta_i - eta_bar)`
/// so that each row sums to `f(x_i) - f(mean)`.
pub fn shap_regression(model: &LinearModel, x: &[f64], p: usize) -> Result<ShapValues> {
    if model.weights.len() != p {
        return Err(Error::Validation(format!("{} weights for {p} features", model.weights.len())));
    }
    let (n, means) = column_means(x, p)?;
    let eta_bar = model.index(&means);
    let mut values = Vec::with_capacity(n * p);
    for row in x.chunks(p) {
        let scale = match model.link {
            Link::Identity => 1.0,
            Link::Probit => {
                let eta = model.index(row);
                let d = eta - eta_bar;
                let dp = norm_cdf(eta) - norm_cdf(eta_bar);
                if d == 0.0 || dp == 0.0 && d.abs() < 1e-12 {
                    norm_pdf(eta_bar)
                } else {
                    dp / d
                }
            }
        };
        values.extend(row.iter().zip(&means).zip(&model.weights).map(|((v, m), w)| scale * w * (v - m)));
    }
    Ok(ShapValues {
        n_rows: n,
        n_features: p,
        values,
        means: means.clone(),
        base: model.predict(&means),
    })
}

/// Importances rescaled to percentages summing to 100.
pub fn normalized_importance(importance: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = importance.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroImportance);
    }
    Ok(importance.iter().map(|v| 100.0 * v / total).collect())
}

/// Exact Shapley values by enumerating all coalitions. `value` receives a
/// membership mask; `n` is capped at 16.
pub fn enumerate_shapley(n: usize, value: impl Fn(&[bool]) -> f64) -> Result<Vec<f64>> {
    if n > 16 {
        return Err(Error::Validation(format!("enumeration over {n} players is too large")));
    }
    let fact: Vec<f64> = (0..=n).scan(1.0, |f, i| {
        if i > 0 {
            *f *= i as f64;
        }
        Some(*f)
    })
    .collect();
    let vals: Vec<f64> = (0..1u32 << n)
        .map(|mask| {
            let members: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
            value(&members)
        })
        .collect();
    let mut phi = vec![0.0; n];
    for (j, pj) in phi.iter_mut().enumerate() {
        for mask in 0..1u32 << n {
            if mask >> j & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = fact[s] * fact[n - s - 1] / fact[n];
            *pj += weight * (vals[(mask | 1 << j) as usize] - vals[mask as usize]);
        }
    }
    Ok(phi)
}
