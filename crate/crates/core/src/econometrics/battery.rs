use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::ols::ols_nw;
use super::probit::{norm_cdf, probit_nw};
use super::transform::{lag, nabla, recession_window, RecessionRule};
use crate::attribution::{normalized_importance, shap_regression, LinearModel, Link, ShapValues};
use crate::calendar::{Frequency, Month};
use crate::error::{Error, Result};
use crate::ingest::{align, Aggregation};
use crate::series::TimeSeries;

pub const CONST_NAME: &str = "const";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Ols,
    Probit,
}

/// One forecasting regression.
///
/// OLS: `nabla^h Y[t+h]` on the regressors at `t`, `p` lags of the one-period
/// change and a constant. Probit: the recession indicator over `t..t+h` on the
/// regressors and a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSpec {
    pub name: String,
    pub dependent: String,
    #[serde(default)]
    pub kind: ModelKind,
    pub horizon: usize,
    /// Defaults to 3 for monthly and 4 for quarterly data; ignored for probit.
    #[serde(default)]
    pub lags: Option<usize>,
    /// Series names or regressor-group names.
    #[serde(default)]
    pub regressors: Vec<String>,
    /// Defaults to the frequency's constant.
    #[serde(default)]
    pub annualization: Option<f64>,
    /// Defaults to 3 for monthly OLS, 1 for quarterly OLS and 12 for probit.
    #[serde(default)]
    pub nw_lags: Option<usize>,
    #[serde(default)]
    pub start: Option<Month>,
    #[serde(default)]
    pub end: Option<Month>,
    /// Specs sharing a group are estimated on their common sample.
    #[serde(default)]
    pub clamp_group: Option<String>,
    #[serde(default)]
    pub recession_rule: RecessionRule,
    /// Monthly regressors entering a quarterly spec.
    #[serde(default = "default_aggregation")]
    pub aggregation: Aggregation,
}

fn default_aggregation() -> Aggregation {
    Aggregation::Mean
}

impl ForecastSpec {
    pub fn ols(name: impl Into<String>, dependent: impl Into<String>, horizon: usize, regressors: &[&str]) -> Self {
        ForecastSpec {
            name: name.into(),
            dependent: dependent.into(),
            kind: ModelKind::Ols,
            horizon,
            lags: None,
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            annualization: None,
            nw_lags: None,
            start: None,
            end: None,
            clamp_group: None,
            recession_rule: RecessionRule::Any,
            aggregation: Aggregation::Mean,
        }
    }

    pub fn probit(name: impl Into<String>, dependent: impl Into<String>, horizon: usize, regressors: &[&str]) -> Self {
        ForecastSpec {
            kind: ModelKind::Probit,
            ..Self::ols(name, dependent, horizon, regressors)
        }
    }
}

/// Named series and regressor groups a battery draws from.
#[derive(Debug, Clone, Default)]
pub struct BatteryData {
    pub series: BTreeMap<String, TimeSeries>,
    pub groups: BTreeMap<String, Vec<String>>,
}

impl BatteryData {
    pub fn insert(&mut self, s: TimeSeries) {
        self.series.insert(s.name.clone(), s);
    }

    pub fn get(&self, name: &str) -> Result<&TimeSeries> {
        self.series
            .get(name)
            .ok_or_else(|| Error::Validation(format!("no series named {name:?}")))
    }

    /// Expands group names into member series names.
    pub fn expand(&self, names: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for n in names {
            match self.groups.get(n) {
                Some(members) => out.extend(members.iter().cloned()),
                None => out.push(n.clone()),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub spec: String,
    pub kind: ModelKind,
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    /// Row-major HAC covariance.
    pub hac_cov: Vec<f64>,
    /// R² for OLS, McFadden pseudo-R² for probit.
    pub r2: f64,
    pub n_obs: usize,
    pub nw_lags: usize,
    pub months: Vec<Month>,
    /// Row-major design, constant column included.
    #[serde(skip)]
    pub design: Vec<f64>,
    pub response: Vec<f64>,
    /// Fitted values, or fitted probabilities for probit.
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Normalized SHAP importance of every non-constant regressor.
    pub shap: Vec<(String, f64)>,
    /// Spec regressors after group expansion, excluding lags.
    pub regressors: Vec<String>,
}

impl RegressionFit {
    fn const_index(&self) -> usize {
        self.names.iter().position(|n| n == CONST_NAME).expect("constant column")
    }

    /// Model on the non-constant columns.
    pub fn linear_model(&self) -> LinearModel {
        let c = self.const_index();
        LinearModel {
            intercept: self.coef[c],
            weights: self.coef.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, v)| *v).collect(),
            link: match self.kind {
                ModelKind::Ols => Link::Identity,
                ModelKind::Probit => Link::Probit,
            },
        }
    }

    /// Design rows without the constant column.
    pub fn features(&self) -> Vec<f64> {
        let c = self.const_index();
        let p = self.names.len();
        self.design
            .chunks(p)
            .flat_map(|row| row.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, v)| *v))
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.names.iter().filter(|n| *n != CONST_NAME).cloned().collect()
    }

    pub fn shap_values(&self) -> Result<ShapValues> {
        shap_regression(&self.linear_model(), &self.features(), self.names.len() - 1)
    }

    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        self.names.iter().position(|n| n == name).map(|i| (self.coef[i], self.se[i]))
    }

    pub fn fitted_series(&self) -> TimeSeries {
        let obs = self.months.iter().copied().zip(self.fitted.iter().copied()).collect();
        TimeSeries::monthly(format!("{}_fitted", self.spec), obs).expect("sorted months")
    }
}

/// Two-sided normal p-value of `coef / se`.
pub fn p_value(coef: f64, se: f64) -> f64 {
    if se > 0.0 {
        erfc((coef / se).abs() / std::f64::consts::SQRT_2)
    } else {
        f64::NAN
    }
}

pub fn stars(coef: f64, se: f64) -> &'static str {
    let p = p_value(coef, se);
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Aligned estimation sample for a spec, before clamping.
struct Sample {
    names: Vec<String>,
    regressors: Vec<String>,
    months: Vec<Month>,
    rows: BTreeMap<Month, (f64, Vec<f64>)>,
    nw_lags: usize,
}

fn build_sample(spec: &ForecastSpec, data: &BatteryData) -> Result<Sample> {
    let dep = data.get(&spec.dependent)?;
    let freq = dep.frequency;
    let c = spec.annualization.unwrap_or(freq.annualization());
    let (lhs, lag_series) = match spec.kind {
        ModelKind::Ols => {
            if spec.horizon == 0 {
                return Err(Error::Validation(format!("spec {}: forecasting horizon must be at least 1", spec.name)));
            }
            let p = spec.lags.unwrap_or(match freq {
                Frequency::Monthly => 3,
                Frequency::Quarterly => 4,
            });
            let one = nabla(dep, 0, c)?;
            let lags: Vec<TimeSeries> = (1..=p).map(|i| lag(&one, i).with_name(format!("{}(t-{i})", spec.dependent))).collect();
            (nabla(dep, spec.horizon, c)?, lags)
        }
        ModelKind::Probit => (recession_window(dep, spec.horizon, spec.recession_rule)?, Vec::new()),
    };
    let lhs = lhs.with_name(format!("{}#lhs", spec.dependent));
    let regressors = data.expand(&spec.regressors);
    let mut names: Vec<String> = regressors.clone();
    names.extend(lag_series.iter().map(|s| s.name.clone()));
    let unique: BTreeSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::Validation(format!("spec {}: repeated regressor", spec.name)));
    }
    let mut inputs: Vec<(&TimeSeries, Aggregation)> = vec![(&lhs, spec.aggregation)];
    for r in &regressors {
        inputs.push((data.get(r)?, spec.aggregation));
    }
    inputs.extend(lag_series.iter().map(|s| (s, spec.aggregation)));
    let panel = align(&inputs, freq)?;
    let mut rows = BTreeMap::new();
    'row: for &m in panel.months() {
        if spec.start.is_some_and(|s| m < s) || spec.end.is_some_and(|e| m > e) {
            continue;
        }
        let Some(y) = panel.get(&lhs.name, m) else {
            continue;
        };
        let mut x = Vec::with_capacity(names.len() + 1);
        for n in &names {
            match panel.get(n, m) {
                Some(v) => x.push(v),
                None => continue 'row,
            }
        }
        x.push(1.0);
        rows.insert(m, (y, x));
    }
    names.push(CONST_NAME.to_string());
    let nw_lags = spec.nw_lags.unwrap_or(match (spec.kind, freq) {
        (ModelKind::Probit, _) => 12,
        (ModelKind::Ols, Frequency::Monthly) => 3,
        (ModelKind::Ols, Frequency::Quarterly) => 1,
    });
    Ok(Sample {
        names,
        regressors,
        months: rows.keys().copied().collect(),
        rows,
        nw_lags,
    })
}

fn estimate(spec: &ForecastSpec, sample: &Sample, keep: Option<&BTreeSet<Month>>) -> Result<RegressionFit> {
    let months: Vec<Month> = sample
        .months
        .iter()
        .copied()
        .filter(|m| keep.is_none_or(|k| k.contains(m)))
        .collect();
    let p = sample.names.len();
    let mut x = Vec::with_capacity(months.len() * p);
    let mut y = Vec::with_capacity(months.len());
    for m in &months {
        let (yv, xv) = &sample.rows[m];
        y.push(*yv);
        x.extend_from_slice(xv);
    }
    if months.len() <= p {
        return Err(Error::InsufficientData {
            what: format!("spec {}", spec.name),
            needed: p + 1,
            got: months.len(),
        });
    }
    let (coef, se, cov, r2, fitted) = match spec.kind {
        ModelKind::Ols => {
            let f = ols_nw(&x, p, &y, &sample.names, sample.nw_lags)?;
            (f.coef, f.se, f.cov, f.r2, f.fitted)
        }
        ModelKind::Probit => {
            let f = probit_nw(&x, p, &y, &sample.names, sample.nw_lags)?;
            let prob = f.index.iter().map(|e| norm_cdf(*e)).collect();
            (f.coef, f.se, f.cov, f.pseudo_r2, prob)
        }
    };
    let residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut fit = RegressionFit {
        spec: spec.name.clone(),
        kind: spec.kind,
        names: sample.names.clone(),
        coef,
        se,
        hac_cov: cov,
        r2,
        n_obs: months.len(),
        nw_lags: sample.nw_lags,
        months,
        design: x,
        response: y,
        fitted,
        residuals,
        shap: Vec::new(),
        regressors: sample.regressors.clone(),
    };
    if p > 1 {
        let shap = fit.shap_values()?;
        match normalized_importance(&shap.importance()) {
            Ok(imp) => fit.shap = fit.feature_names().into_iter().zip(imp).collect(),
            Err(Error::ZeroImportance) => log::warn!("spec {}: all attributions are zero", spec.name),
            Err(e) => return Err(e),
        }
    }
    Ok(fit)
}

/// Fits a single spec on its own sample.
pub fn fit_spec(spec: &ForecastSpec, data: &BatteryData) -> Result<RegressionFit> {
    estimate(spec, &build_sample(spec, data)?, None)
}

#[derive(Debug)]
pub struct BatteryOutcome {
    pub spec: String,
    pub result: Result<RegressionFit>,
}

/// Fits every spec. Specs in a clamp group share the intersection of their
/// samples. A failing spec is reported in its outcome and does not stop the
/// others; outcomes follow spec order.
pub fn run_forecast_battery(specs: &[ForecastSpec], data: &BatteryData) -> Vec<BatteryOutcome> {
    let samples: Vec<Result<Sample>> = specs.par_iter().map(|s| build_sample(s, data)).collect();
    let mut common: BTreeMap<&str, BTreeSet<Month>> = BTreeMap::new();
    for (spec, sample) in specs.iter().zip(&samples) {
        let (Some(g), Ok(sample)) = (&spec.clamp_group, sample) else {
            continue;
        };
        let months: BTreeSet<Month> = sample.months.iter().copied().collect();
        common
            .entry(g.as_str())
            .and_modify(|c| c.retain(|m| months.contains(m)))
            .or_insert(months);
    }
    specs
        .par_iter()
        .zip(samples)
        .map(|(spec, sample)| BatteryOutcome {
            spec: spec.name.clone(),
            result: sample.and_then(|s| estimate(spec, &s, spec.clamp_group.as_deref().map(|g| &common[g]))),
        })
        .collect()
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Writes `regressor,coef,se,stars` rows followed by `R2`, `T` and
/// `SHAP(x)` footer rows for the spec's own regressors.
pub fn write_battery_csv<W: Write>(fit: &RegressionFit, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Validation(format!("writing battery table: {e}"));
    out.write_record(["regressor", "coef", "se", "stars"]).map_err(io)?;
    for ((n, c), s) in fit.names.iter().zip(&fit.coef).zip(&fit.se) {
        out.write_record([n.as_str(), &fmt(*c), &fmt(*s), stars(*c, *s)]).map_err(io)?;
    }
    out.write_record(["R2", &fmt(fit.r2), "", ""]).map_err(io)?;
    out.write_record(["T", &fit.n_obs.to_string(), "", ""]).map_err(io)?;
    for (n, v) in &fit.shap {
        if fit.regressors.contains(n) {
            out.write_record([format!("SHAP({n})").as_str(), &fmt(*v), "", ""]).map_err(io)?;
        }
    }
    out.flush().map_err(|e| Error::Validation(format!("writing battery table: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TransformKind;

    fn data() -> BatteryData {
        let mut d = BatteryData::default();
        let n: usize = 240;
        let m0 = Month::new(1990, 1);
        let x: Vec<f64> = (0..n).map(|i| (0.21 * i as f64).sin() + 0.3 * (0.05 * i as f64).cos()).collect();
        let mut level = 100.0;
        let mut emp = Vec::new();
        for i in 0..n {
            level *= 1.0 + 0.002 - 0.001 * x[i.saturating_sub(1)] + 0.0005 * (1.7 * i as f64).sin();
            emp.push((m0.offset(i as i32), level));
        }
        d.insert(TimeSeries::new("EMP", Frequency::Monthly, TransformKind::LogDifference, emp).unwrap());
        d.insert(TimeSeries::monthly("X", (0..n).map(|i| (m0.offset(i as i32), x[i])).collect()).unwrap());
        d.insert(TimeSeries::monthly("Z", (0..n).map(|i| (m0.offset(i as i32), (0.37 * i as f64).cos())).collect()).unwrap());
        let rec = (0..n).map(|i| (m0.offset(i as i32), if x[i] > 0.8 || i % 50 == 3 { 1.0 } else { 0.0 })).collect();
        d.insert(TimeSeries::monthly("NBER", rec).unwrap());
        d.groups.insert("G".into(), vec!["X".into(), "Z".into()]);
        d
    }

    #[test]
    fn clamp_shares_sample() {
        let d = data();
        let mut a = ForecastSpec::ols("a", "EMP", 3, &["X"]);
        let mut b = ForecastSpec::ols("b", "EMP", 12, &["X"]);
        a.clamp_group = Some("g".into());
        b.clamp_group = Some("g".into());
        let out = run_forecast_battery(&[a.clone(), b], &d);
        let (fa, fb) = (out[0].result.as_ref().unwrap(), out[1].result.as_ref().unwrap());
        assert_eq!(fa.n_obs, fb.n_obs);
        assert_eq!(fa.months, fb.months);
        assert!(fit_spec(&a, &d).unwrap().n_obs > fa.n_obs);
    }

    #[test]
    fn group_expansion_and_lags() {
        let d = data();
        let f = fit_spec(&ForecastSpec::ols("g", "EMP", 3, &["G"]), &d).unwrap();
        assert_eq!(f.names, ["X", "Z", "EMP(t-1)", "EMP(t-2)", "EMP(t-3)", CONST_NAME]);
        assert!((f.shap.iter().map(|s| s.1).sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn failure_is_isolated() {
        let d = data();
        let out = run_forecast_battery(
            &[ForecastSpec::ols("bad", "EMP", 3, &["missing"]), ForecastSpec::probit("rec", "NBER", 3, &["X"])],
            &d,
        );
        assert!(out[0].result.is_err());
        let rec = out[1].result.as_ref().unwrap();
        assert_eq!(rec.nw_lags, 12);
        assert_eq!(rec.names, ["X", CONST_NAME]);
        assert!(run_forecast_battery(&[], &d).is_empty());
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(2.6, 1.0), "***");
        assert_eq!(stars(2.0, 1.0), "**");
        assert_eq!(stars(1.7, 1.0), "*");
        assert_eq!(stars(1.0, 1.0), "");
    }

    #[test]
    fn csv_layout() {
        let d = data();
        let f = fit_spec(&ForecastSpec::ols("g", "EMP", 3, &["X"]), &d).unwrap();
        let mut buf = Vec::new();
        write_battery_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(first, ["regressor", "X", "EMP(t-1)", "EMP(t-2)", "EMP(t-3)", CONST_NAME, "R2", "T", "SHAP(X)"]);
    }
}
