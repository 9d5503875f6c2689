//! Dated containers shared by every stage: scalar series and feature frames.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calendar::{Frequency, Month};
use crate::error::{Error, Result};

/// How a macro series enters a growth transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    LogDifference,
    ArithmeticDifference,
    Level,
}

/// A named, dated scalar series. Dates are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub frequency: Frequency,
    pub transform: TransformKind,
    observations: Vec<(Month, f64)>,
}

impl TimeSeries {
    /// Builds a series, sorting by date. Duplicate dates are rejected.
    pub fn new(
        name: impl Into<String>,
        frequency: Frequency,
        transform: TransformKind,
        mut observations: Vec<(Month, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        observations.sort_by_key(|(m, _)| *m);
        for w in observations.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicatePeriod {
                    series: name,
                    date: w[0].0.to_string(),
                });
            }
        }
        for (m, _) in &observations {
            if !frequency.accepts(*m) {
                return Err(Error::FrequencyMismatch {
                    series: name,
                    date: m.to_string(),
                    expected: frequency.name(),
                });
            }
        }
        Ok(TimeSeries {
            name,
            frequency,
            transform,
            observations,
        })
    }

    /// Monthly level series; convenient for derived quantities.
    pub fn monthly(name: impl Into<String>, observations: Vec<(Month, f64)>) -> Result<Self> {
        Self::new(name, Frequency::Monthly, TransformKind::Level, observations)
    }

    pub fn observations(&self) -> &[(Month, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_month(&self) -> Option<Month> {
        self.observations.first().map(|(m, _)| *m)
    }

    pub fn last_month(&self) -> Option<Month> {
        self.observations.last().map(|(m, _)| *m)
    }

    pub fn get(&self, m: Month) -> Option<f64> {
        self.observations
            .binary_search_by_key(&m, |(d, _)| *d)
            .ok()
            .map(|i| self.observations[i].1)
    }

    pub fn to_map(&self) -> BTreeMap<Month, f64> {
        self.observations.iter().copied().collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn map_values(&self, name: impl Into<String>, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            name: name.into(),
            frequency: self.frequency,
            transform: self.transform,
            observations: self.observations.iter().map(|&(m, v)| (m, f(v))).collect(),
        }
    }
}

/// Row-major dated feature matrix. Rows are months in increasing order.
///
/// Topic attention is the main instance: one row per month, one column per
/// topic, each row on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    names: Vec<String>,
    months: Vec<Month>,
    values: Vec<f64>,
}

/// Monthly topic attention shares.
pub type AttentionMatrix = FeatureFrame;

impl FeatureFrame {
    pub fn new(names: Vec<String>, months: Vec<Month>, values: Vec<f64>) -> Result<Self> {
        if values.len() != names.len() * months.len() {
            return Err(Error::Validation(format!(
                "feature frame shape mismatch: {} values for {}x{}",
                values.len(),
                months.len(),
                names.len()
            )));
        }
        if months.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("feature frame months not strictly increasing".into()));
        }
        Ok(FeatureFrame {
            names,
            months,
            values,
        })
    }

    pub fn from_rows(names: Vec<String>, rows: Vec<(Month, Vec<f64>)>) -> Result<Self> {
        let p = names.len();
        let mut months = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * p);
        for (m, row) in rows {
            if row.len() != p {
                return Err(Error::Validation(format!("row {m} has {} values, expected {p}", row.len())));
            }
            months.push(m);
            values.extend(row);
        }
        Self::new(names, months, values)
    }

    /// Single-column frame from a series.
    pub fn from_series(series: &TimeSeries) -> Self {
        FeatureFrame {
            names: vec![series.name.clone()],
            months: series.observations().iter().map(|(m, _)| *m).collect(),
            values: series.observations().iter().map(|(_, v)| *v).collect(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn n_rows(&self) -> usize {
        self.months.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_index(&self, m: Month) -> Option<usize> {
        self.months.binary_search(&m).ok()
    }

    pub fn row_at(&self, m: Month) -> Option<&[f64]> {
        self.row_index(m).map(|i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i)[j]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = (Month, &[f64])> {
        (0..self.n_rows()).map(move |i| (self.months[i], self.row(i)))
    }

    /// Rows whose month satisfies `keep`.
    pub fn filter_months(&self, keep: impl Fn(Month) -> bool) -> FeatureFrame {
        let p = self.names.len();
        let mut months = Vec::new();
        let mut values = Vec::new();
        for (m, row) in self.rows() {
            if keep(m) {
                months.push(m);
                values.extend_from_slice(row);
            }
        }
        debug_assert_eq!(values.len(), months.len() * p);
        FeatureFrame {
            names: self.names.clone(),
            months,
            values,
        }
    }

    /// Largest deviation of any row sum from one, and the smallest entry.
    pub fn simplex_deviation(&self) -> (f64, f64) {
        let mut max_dev: f64 = 0.0;
        let mut min_entry = f64::INFINITY;
        for (_, row) in self.rows() {
            let s: f64 = row.iter().sum();
            max_dev = max_dev.max((s - 1.0).abs());
            for &v in row {
                min_entry = min_entry.min(v);
            }
        }
        (max_dev, min_entry)
    }
}
