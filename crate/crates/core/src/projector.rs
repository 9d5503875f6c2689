//! Expanding-window, in-sample and backward projections of a target series
//! onto attention shares.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attribution::StaleWeights;
use crate::calendar::{Month, Window};
use crate::econometrics::{default_lags, ols_nw};
use crate::error::{Error, Result};
use crate::lasso::{LassoConfig, LassoDesign, LassoFit};
use crate::series::{FeatureFrame, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProjectionMode {
    Is,
    Oos,
    Backward,
}

impl fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMode::Is => "IS",
            ProjectionMode::Oos => "OOS",
            ProjectionMode::Backward => "BACKWARD",
        })
    }
}

impl FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IS" => Ok(ProjectionMode::Is),
            "OOS" => Ok(ProjectionMode::Oos),
            "BACKWARD" => Ok(ProjectionMode::Backward),
            _ => Err(Error::Validation(format!("unknown projection mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub date: Month,
    pub value: f64,
    pub mode: ProjectionMode,
    /// Last month of the window whose fit produced the value.
    pub window_end: Month,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSeries {
    pub name: String,
    pub mode: ProjectionMode,
    pub points: Vec<ProjectionPoint>,
}

impl ProjectionSeries {
    pub fn to_series(&self) -> TimeSeries {
        let obs = self.points.iter().map(|p| (p.date, p.value)).collect();
        TimeSeries::monthly(self.name.clone(), obs).expect("months are increasing")
    }

    pub fn get(&self, m: Month) -> Option<&ProjectionPoint> {
        self.points
            .binary_search_by_key(&m, |p| p.date)
            .ok()
            .map(|i| &self.points[i])
    }

    /// Points dated after `m`.
    pub fn after(&self, m: Month) -> TimeSeries {
        let obs = self.points.iter().filter(|p| p.date > m).map(|p| (p.date, p.value)).collect();
        TimeSeries::monthly(self.name.clone(), obs).expect("months are increasing")
    }

    /// `date,value,mode,window_end`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.points {
            out.serialize(p).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn read_csv<R: Read>(name: impl Into<String>, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut points = Vec::new();
        for rec in rd.deserialize() {
            let p: ProjectionPoint = rec.map_err(csv_err)?;
            points.push(p);
        }
        let mode = points.first().map_or(ProjectionMode::Oos, |p| p.mode);
        if points.windows(2).any(|w| w[0].date >= w[1].date) {
            return Err(Error::Validation("projection dates are not increasing".into()));
        }
        Ok(ProjectionSeries {
            name: name.into(),
            mode,
            points,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Malformed {
        path: "csv".into(),
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

/// Fit used for every window end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLogEntry {
    pub window_end: Month,
    pub fit: LassoFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRun {
    pub series: ProjectionSeries,
    /// One entry per distinct window end, in date order.
    pub log: Vec<FitLogEntry>,
}

impl ProjectionRun {
    pub fn fit_for(&self, window_end: Month) -> Option<&LassoFit> {
        self.log
            .binary_search_by_key(&window_end, |e| e.window_end)
            .ok()
            .map(|i| &self.log[i].fit)
    }

    /// Intercept and weights applied at each projected month.
    pub fn stale_weights(&self) -> BTreeMap<Month, StaleWeights> {
        self.series
            .points
            .iter()
            .filter_map(|p| {
                self.fit_for(p.window_end).map(|f| {
                    (
                        p.date,
                        StaleWeights {
                            intercept: f.intercept,
                            weights: f.weights.clone(),
                        },
                    )
                })
            })
            .collect()
    }

    pub fn weight_paths(&self) -> Vec<(Month, Vec<f64>)> {
        self.log.iter().map(|e| (e.window_end, e.fit.weights.clone())).collect()
    }

    /// `window_end,lambda,intercept,n_selected,n_positive,n_negative`.
    pub fn write_fit_log<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["window_end", "lambda", "intercept", "n_selected", "n_positive", "n_negative"])
            .map_err(csv_err)?;
        for e in &self.log {
            let f = &e.fit;
            out.write_record([
                e.window_end.to_string(),
                f.lambda.to_string(),
                f.intercept.to_string(),
                f.selected.len().to_string(),
                f.n_positive().to_string(),
                f.n_negative().to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Validation(e.to_string()))
    }

    /// `window_end,topic,weight` for nonzero weights.
    pub fn write_weights<W: Write>(&self, topics: &[String], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["window_end", "topic", "weight"]).map_err(csv_err)?;
        for e in &self.log {
            for &k in &e.fit.selected {
                out.write_record([e.window_end.to_string(), topics[k].clone(), e.fit.weights[k].to_string()])
                    .map_err(csv_err)?;
            }
        }
        out.flush().map_err(|e| Error::Validation(e.to_string()))
    }
}

/// Rows of `attention` with a target value, on or after `from`.
fn sample(attention: &FeatureFrame, target: &TimeSeries, from: Month, to: Option<Month>) -> (Vec<Month>, Vec<f64>, Vec<f64>) {
    let mut months = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (m, row) in attention.rows() {
        if m < from || to.is_some_and(|t| m > t) {
            continue;
        }
        if let Some(v) = target.get(m) {
            months.push(m);
            x.extend_from_slice(row);
            y.push(v);
        }
    }
    (months, x, y)
}

fn log_gaps(attention: &FeatureFrame, from: Month) {
    for w in attention.months().windows(2) {
        if w[1] > from && w[1] != w[0].succ() {
            log::info!("no attention for {} through {}; months skipped", w[0].succ(), w[1].pred());
        }
    }
}

/// Projects `target` on `attention` with a model first estimated on
/// `training` and re-estimated every month after it.
///
/// Training months carry the training model's fitted values. Afterwards an
/// `Is` run refits through `t` and predicts `t`; an `Oos` run predicts `t`
/// with the fit through `t-1`.
pub fn expanding_project(
    attention: &FeatureFrame,
    target: &TimeSeries,
    training: Window,
    mode: ProjectionMode,
    cfg: &LassoConfig,
) -> Result<ProjectionRun> {
    if mode == ProjectionMode::Backward {
        return Err(Error::Validation("use backward_project for backward projections".into()));
    }
    log_gaps(attention, training.start);
    let (months, x, y) = sample(attention, target, training.start, None);
    let design = LassoDesign::new(x, attention.n_cols(), y)?;
    let n_train = months.partition_point(|m| *m <= training.end);

    // Window end and usable row count for every projected month.
    let mut plan: Vec<(Month, Month, usize)> = Vec::new();
    for &m in attention.months() {
        if m < training.start {
            continue;
        }
        if m <= training.end {
            plan.push((m, training.end, n_train));
            continue;
        }
        let end = match mode {
            ProjectionMode::Is => m,
            _ => m.pred(),
        };
        plan.push((m, end, months.partition_point(|d| *d <= end)));
    }
    let mut ends: BTreeMap<Month, usize> = BTreeMap::new();
    for &(_, end, n) in &plan {
        ends.insert(end, n);
    }
    let mut counts: Vec<usize> = ends.values().copied().collect();
    counts.dedup();
    let fits: Vec<(usize, LassoFit)> = counts
        .iter()
        .zip(design.fit_sequence(&counts, cfg)?)
        .map(|(&n, mut f)| {
            f.window = Some(Window::new(months[0], months[n - 1])?);
            Ok((n, f))
        })
        .collect::<Result<_>>()?;
    let by_count: BTreeMap<usize, &LassoFit> = fits.iter().map(|(n, f)| (*n, f)).collect();
    let log: Vec<FitLogEntry> = ends
        .iter()
        .map(|(&end, n)| FitLogEntry {
            window_end: end,
            fit: by_count[n].clone(),
        })
        .collect();
    let points = plan
        .iter()
        .map(|&(m, end, n)| ProjectionPoint {
            date: m,
            value: by_count[&n].predict(attention.row_at(m).expect("planned month")),
            mode,
            window_end: end,
        })
        .collect();
    Ok(ProjectionRun {
        series: ProjectionSeries {
            name: format!("{}_hat", target.name),
            mode,
            points,
        },
        log,
    })
}

/// Fits once on `training` and applies the model to every earlier month
/// with attention.
pub fn backward_project(attention: &FeatureFrame, target: &TimeSeries, training: Window, cfg: &LassoConfig) -> Result<ProjectionRun> {
    let (months, x, y) = sample(attention, target, training.start, Some(training.end));
    let earlier: Vec<Month> = attention.months().iter().copied().filter(|m| *m < training.start).collect();
    if earlier.is_empty() {
        return Err(Error::NoBackwardData);
    }
    log_gaps(attention, earlier[0]);
    let n = months.len();
    let mut fit = LassoDesign::new(x, attention.n_cols(), y)?.fit_first(n, cfg)?;
    fit.window = Some(Window::new(months[0], months[n - 1])?);
    let points = earlier
        .iter()
        .map(|&m| ProjectionPoint {
            date: m,
            value: fit.predict(attention.row_at(m).expect("attention month")),
            mode: ProjectionMode::Backward,
            window_end: training.end,
        })
        .collect();
    Ok(ProjectionRun {
        series: ProjectionSeries {
            name: format!("{}_hat", target.name),
            mode: ProjectionMode::Backward,
            points,
        },
        log: vec![FitLogEntry {
            window_end: training.end,
            fit,
        }],
    })
}

/// Regression of the target on its projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub beta: f64,
    pub se_beta: f64,
    pub alpha: f64,
    pub se_alpha: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "RMSE")]
    pub rmse: f64,
    #[serde(rename = "MAE")]
    pub mae: f64,
}

/// OLS of `y` on a constant and `yhat` over their common months with
/// `floor(T^(1/4))` Newey-West lags. RMSE and MAE are of `y - yhat`.
pub fn fit_diagnostics(y: &TimeSeries, yhat: &TimeSeries) -> Result<FitDiagnostics> {
    let pairs: Vec<(f64, f64)> = yhat
        .observations()
        .iter()
        .filter_map(|&(m, h)| y.get(m).map(|v| (v, h)))
        .collect();
    let t = pairs.len();
    if t < 8 {
        return Err(Error::InsufficientData {
            what: "fit diagnostics".into(),
            needed: 8,
            got: t,
        });
    }
    let mean_h = pairs.iter().map(|p| p.1).sum::<f64>() / t as f64;
    let var_h = pairs.iter().map(|p| (p.1 - mean_h).powi(2)).sum::<f64>() / t as f64;
    if var_h <= 1e-24 * mean_h.powi(2).max(1.0) {
        return Err(Error::DegenerateVariance(format!("projection {} is constant", yhat.name)));
    }
    let x: Vec<f64> = pairs.iter().flat_map(|p| [1.0, p.1]).collect();
    let yv: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fit = ols_nw(&x, 2, &yv, &["alpha".into(), "beta".into()], default_lags(t))?;
    let err: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(FitDiagnostics {
        alpha: fit.coef[0],
        beta: fit.coef[1],
        se_alpha: fit.se[0],
        se_beta: fit.se[1],
        r2: fit.r2,
        t,
        rmse: (err.iter().map(|e| e * e).sum::<f64>() / t as f64).sqrt(),
        mae: err.iter().map(|e| e.abs()).sum::<f64>() / t as f64,
    })
}

/// `column,beta,se_beta,alpha,se_alpha,R2,T,RMSE,MAE`.
pub fn write_diagnostics_csv<W: Write>(rows: &[(String, FitDiagnostics)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["column", "beta", "se_beta", "alpha", "se_alpha", "R2", "T", "RMSE", "MAE"])
        .map_err(csv_err)?;
    for (name, d) in rows {
        out.write_record([
            name.clone(),
            d.beta.to_string(),
            d.se_beta.to_string(),
            d.alpha.to_string(),
            d.se_alpha.to_string(),
            d.r2.to_string(),
            d.t.to_string(),
            d.rmse.to_string(),
            d.mae.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Validation(e.to_string()))
}
