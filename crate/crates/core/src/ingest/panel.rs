use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::calendar::{Frequency, Month};
use crate::error::{Error, Result};
use crate::series::{TimeSeries, TransformKind};

/// Monthly → quarterly aggregation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Value of the quarter's third month (rates, indicators).
    #[default]
    Last,
    /// Mean of the quarter's three months (flows).
    Mean,
}

/// Series aligned on one calendar. Missing cells stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub frequency: Frequency,
    names: Vec<String>,
    months: Vec<Month>,
    cells: Vec<Option<f64>>,
}

impl Panel {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn n_rows(&self) -> usize {
        self.months.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str, m: Month) -> Option<f64> {
        let j = self.column_index(name)?;
        let i = self.months.binary_search(&m).ok()?;
        self.cells[i * self.names.len() + j]
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        let p = self.names.len();
        Some((0..self.months.len()).map(|i| self.cells[i * p + j]).collect())
    }

    /// Number of missing cells.
    pub fn n_missing(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Observed values of one column as a series.
    pub fn series(&self, name: &str) -> Option<TimeSeries> {
        let col = self.column(name)?;
        let obs = self
            .months
            .iter()
            .zip(col)
            .filter_map(|(m, v)| v.map(|v| (*m, v)))
            .collect();
        TimeSeries::new(name, self.frequency, TransformKind::Level, obs).ok()
    }
}

fn to_frequency(series: &TimeSeries, agg: Aggregation, target: Frequency) -> Result<BTreeMap<Month, f64>> {
    match (series.frequency, target) {
        (a, b) if a == b => Ok(series.to_map()),
        (Frequency::Monthly, Frequency::Quarterly) => {
            let map = series.to_map();
            let quarters: BTreeSet<Month> = map.keys().map(|m| m.quarter_start()).collect();
            let mut out = BTreeMap::new();
            for q in quarters {
                let v = match agg {
                    Aggregation::Last => map.get(&q.offset(2)).copied(),
                    Aggregation::Mean => {
                        let vals: Option<Vec<f64>> = (0..3).map(|i| map.get(&q.offset(i)).copied()).collect();
                        vals.map(|v| v.iter().sum::<f64>() / 3.0)
                    }
                };
                if let Some(v) = v {
                    out.insert(q, v);
                }
            }
            Ok(out)
        }
        _ => Err(Error::Validation(format!(
            "series {} is {} and cannot be aligned to {}",
            series.name,
            series.frequency.name(),
            target.name()
        ))),
    }
}

/// Aligns series onto a common calendar.
///
/// The panel spans the overlap of the series' date ranges; every row date is
/// an observed date of at least one input. Columns are ordered by name, so the
/// result does not depend on argument order. Repeated identical series
/// collapse into one column; same-named series with different data are
/// rejected.
pub fn align(inputs: &[(&TimeSeries, Aggregation)], frequency: Frequency) -> Result<Panel> {
    let mut columns: BTreeMap<String, BTreeMap<Month, f64>> = BTreeMap::new();
    for (s, agg) in inputs {
        let data = to_frequency(s, *agg, frequency)?;
        if let Some(prev) = columns.get(&s.name) {
            if *prev != data {
                return Err(Error::Validation(format!("two different series named {:?}", s.name)));
            }
            continue;
        }
        columns.insert(s.name.clone(), data);
    }
    if columns.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let mut lo = Month::from_ordinal(i32::MIN);
    let mut hi = Month::from_ordinal(i32::MAX);
    for data in columns.values() {
        let (Some(first), Some(last)) = (data.keys().next(), data.keys().next_back()) else {
            return Err(Error::EmptyIntersection);
        };
        lo = lo.max(*first);
        hi = hi.min(*last);
    }
    if lo > hi {
        return Err(Error::EmptyIntersection);
    }
    let months: Vec<Month> = columns
        .values()
        .flat_map(|d| d.range(lo..=hi).map(|(m, _)| *m))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let names: Vec<String> = columns.keys().cloned().collect();
    let mut cells = Vec::with_capacity(months.len() * names.len());
    for m in &months {
        for data in columns.values() {
            cells.push(data.get(m).copied());
        }
    }
    Ok(Panel {
        frequency,
        names,
        months,
        cells,
    })
}
