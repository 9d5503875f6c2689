use std::collections::BTreeMap;

use serde::Serialize;

use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::series::{FeatureFrame, TimeSeries};

/// Metatopic name with member topic indices, as returned by
/// [`MetatopicMap::partition`](crate::ingest::MetatopicMap::partition).
pub type Partition = [(String, Vec<usize>)];

/// Intercept and topic weights in force at a month.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaleWeights {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

/// Summed topic weights per metatopic.
pub fn metatopic_weights(weights: &[f64], partition: &Partition) -> Vec<(String, f64)> {
    partition
        .iter()
        .map(|(name, members)| (name.clone(), members.iter().map(|&k| weights[k]).sum()))
        .collect()
}

/// Share of projection variance attributed to each metatopic, from the
/// within-metatopic blocks of the sample covariance of attention. Shares sum
/// to 100.
pub fn explained_variance(attention: &FeatureFrame, weights: &[f64], partition: &Partition) -> Result<Vec<(String, f64)>> {
    let n = attention.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "explained variance".into(),
            needed: 2,
            got: n,
        });
    }
    if weights.len() != attention.n_cols() {
        return Err(Error::Validation(format!(
            "{} weights for {} topics",
            weights.len(),
            attention.n_cols()
        )));
    }
    let mut raw = Vec::with_capacity(partition.len());
    for (name, members) in partition {
        let active: Vec<usize> = members.iter().copied().filter(|&k| weights[k] != 0.0).collect();
        // Variance of the metatopic's weighted sum equals the double sum of
        // weighted covariances over its members.
        let sums: Vec<f64> = attention
            .rows()
            .map(|(_, row)| active.iter().map(|&k| weights[k] * row[k]).sum())
            .collect();
        let mean = sums.iter().sum::<f64>() / n as f64;
        let var = sums.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        raw.push((name.clone(), var));
    }
    let total: f64 = raw.iter().map(|r| r.1).sum();
    if total <= 0.0 {
        return Err(Error::ZeroDenominator("no metatopic carries projection variance".into()));
    }
    Ok(raw.into_iter().map(|(n, v)| (n, 100.0 * v / total)).collect())
}

/// Metatopic contributions `sum_{k in M} w_{k,t-1} theta_{k,t}` per month.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetatopicDecomposition {
    pub metatopics: Vec<String>,
    pub months: Vec<Month>,
    /// Row-major `months x metatopics`.
    pub values: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl MetatopicDecomposition {
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.metatopics.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// Intercept plus all contributions.
    pub fn fitted(&self) -> TimeSeries {
        let obs = (0..self.months.len())
            .map(|i| (self.months[i], self.intercepts[i] + self.row(i).iter().sum::<f64>()))
            .collect();
        TimeSeries::monthly("fitted", obs).expect("sorted months")
    }

    pub fn series(&self, j: usize) -> TimeSeries {
        let obs = (0..self.months.len()).map(|i| (self.months[i], self.row(i)[j])).collect();
        TimeSeries::monthly(self.metatopics[j].clone(), obs).expect("sorted months")
    }

    /// `target - fitted` on common months.
    pub fn residual(&self, target: &TimeSeries) -> TimeSeries {
        difference(target, &self.fitted(), format!("{}-RES", target.name))
    }

    /// `target` minus the contribution of metatopic `j`.
    pub fn metatopic_residual(&self, j: usize, target: &TimeSeries) -> TimeSeries {
        difference(target, &self.series(j), format!("{}-RES", self.metatopics[j]))
    }
}

fn difference(a: &TimeSeries, b: &TimeSeries, name: String) -> TimeSeries {
    let obs = b
        .observations()
        .iter()
        .filter_map(|&(m, v)| a.get(m).map(|y| (m, y - v)))
        .collect();
    TimeSeries::monthly(name, obs).expect("sorted months")
}

/// Decomposes the projection at every month with stale weights available.
pub fn metatopic_series(
    attention: &FeatureFrame,
    weights: &BTreeMap<Month, StaleWeights>,
    partition: &Partition,
) -> Result<MetatopicDecomposition> {
    let mut months = Vec::new();
    let mut values = Vec::new();
    let mut intercepts = Vec::new();
    for (m, row) in attention.rows() {
        let Some(sw) = weights.get(&m) else {
            continue;
        };
        if sw.weights.len() != row.len() {
            return Err(Error::Validation(format!("month {m}: {} weights for {} topics", sw.weights.len(), row.len())));
        }
        months.push(m);
        intercepts.push(sw.intercept);
        for (_, members) in partition {
            values.push(members.iter().map(|&k| sw.weights[k] * row[k]).sum());
        }
    }
    Ok(MetatopicDecomposition {
        metatopics: partition.iter().map(|p| p.0.clone()).collect(),
        months,
        values,
        intercepts,
    })
}

/// Metatopic weights for each window of an expanding run.
pub fn rolling_metatopic_weights(fits: &[(Month, Vec<f64>)], partition: &Partition) -> Vec<(Month, Vec<f64>)> {
    fits.iter()
        .map(|(m, w)| (*m, metatopic_weights(w, partition).into_iter().map(|p| p.1).collect()))
        .collect()
}
