use std::collections::BTreeMap;

use super::vectorize::{ATTENTION, SENT_LM, TOPIC_SENTIMENT};
use super::{csv_rows, parse_f64, FeatureSource, ProjectionSpec, Stage};
use crate::attribution::StaleWeights;
use crate::calendar::{Month, Window};
use crate::error::{Error, Result};
use crate::lasso::LassoConfig;
use crate::projector::{
    backward_project, expanding_project, fit_diagnostics, write_diagnostics_csv, FitDiagnostics, ProjectionMode, ProjectionRun,
    ProjectionSeries,
};
use crate::sentiment::sentiment_weighted;
use crate::series::{FeatureFrame, TimeSeries};
use crate::text::{read_attention_csv, read_frame_csv};

pub(super) fn run_file(name: &str, mode: ProjectionMode, what: &str) -> String {
    match what {
        "" => format!("project/{name}_{mode}.csv"),
        _ => format!("project/{name}_{mode}_{what}.csv"),
    }
}

pub(super) fn diagnostics_file(name: &str) -> String {
    format!("project/{name}_diagnostics.csv")
}

/// Months with both attention and a target value.
fn overlap(features: &FeatureFrame, target: &TimeSeries) -> Result<Window> {
    let mut months = features.months().iter().copied().filter(|&m| target.get(m).is_some());
    let first = months.next().ok_or(Error::EmptyIntersection)?;
    Window::new(first, months.last().unwrap_or(first))
}

/// The run as written to disk: an OOS run keeps only post-training points.
pub fn published_run(
    features: &FeatureFrame,
    target: &TimeSeries,
    training: Window,
    mode: ProjectionMode,
    backward_training: Option<Window>,
    cfg: &LassoConfig,
) -> Result<ProjectionRun> {
    match mode {
        ProjectionMode::Backward => {
            let w = match backward_training {
                Some(w) => w,
                None => overlap(features, target)?,
            };
            backward_project(features, target, w, cfg)
        }
        ProjectionMode::Is => expanding_project(features, target, training, mode, cfg),
        ProjectionMode::Oos => {
            let mut run = expanding_project(features, target, training, mode, cfg)?;
            run.series.points.retain(|p| p.date > training.end);
            Ok(run)
        }
    }
}

fn within(s: &TimeSeries, keep: impl Fn(Month) -> bool) -> TimeSeries {
    let obs = s.observations().iter().copied().filter(|o| keep(o.0)).collect();
    TimeSeries::monthly(s.name.clone(), obs).expect("sorted")
}

/// Table 1 rows for the runs of one projection. Columns with fewer than 8
/// target months or a constant projection are left out.
pub fn diagnostics_rows(
    runs: &BTreeMap<ProjectionMode, ProjectionRun>,
    target: &TimeSeries,
    training: Window,
) -> Result<Vec<(String, FitDiagnostics)>> {
    let mut cols: Vec<(&str, TimeSeries)> = Vec::new();
    if let Some(r) = runs.get(&ProjectionMode::Is) {
        let s = r.series.to_series();
        cols.push(("IS, Training", within(&s, |m| training.contains(m))));
        cols.push(("IS, Post-training", within(&s, |m| m > training.end)));
        cols.insert(1, ("IS", s));
    }
    if let Some(r) = runs.get(&ProjectionMode::Oos) {
        cols.push(("OOS", r.series.to_series()));
    }
    if let Some(r) = runs.get(&ProjectionMode::Backward) {
        cols.push(("BACKWARD", r.series.to_series()));
    }
    let mut rows = Vec::new();
    for (name, s) in cols {
        match fit_diagnostics(target, &s) {
            Ok(d) => rows.push((name.to_string(), d)),
            Err(e @ Error::InsufficientData { got: 0, .. }) => {
                log::info!("diagnostics column {name:?} skipped: {e}");
            }
            Err(e @ (Error::InsufficientData { .. } | Error::DegenerateVariance(_))) => {
                log::warn!("diagnostics column {name:?} skipped: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// `target - projection` on common months.
fn residual(target: &TimeSeries, proj: &TimeSeries, name: String) -> Result<TimeSeries> {
    let obs = proj
        .observations()
        .iter()
        .filter_map(|&(m, v)| target.get(m).map(|y| (m, y - v)))
        .collect();
    TimeSeries::monthly(name, obs)
}

/// BACKWARD points followed by the same fit's in-sample values.
fn history(run: &ProjectionRun, features: &FeatureFrame, name: String) -> Result<TimeSeries> {
    let entry = &run.log[0];
    let w = entry.fit.window.expect("backward fit records its window");
    let mut obs: Vec<(Month, f64)> = run.series.points.iter().map(|p| (p.date, p.value)).collect();
    obs.extend(features.rows().filter(|(m, _)| w.contains(*m)).map(|(m, row)| (m, entry.fit.predict(row))));
    TimeSeries::monthly(name, obs)
}

/// Lasso projections, fit logs, weights and diagnostics for every
/// configured projection, plus the derived series used downstream.
pub fn project(s: &Stage) -> Result<()> {
    let cfg = &s.config;
    let mut attention: Option<FeatureFrame> = None;
    for p in &cfg.project {
        let features = match p.features {
            FeatureSource::Attention => {
                if attention.is_none() {
                    attention = Some(read_attention_csv(&s.artifacts.read(ATTENTION)?[..])?);
                }
                attention.clone().expect("loaded")
            }
            FeatureSource::SentimentLm => {
                FeatureFrame::from_series(&s.read_series(&format!("series/{SENT_LM}.csv"), SENT_LM)?)
            }
        };
        project_one(s, p, &features)?;
    }
    Ok(())
}

fn project_one(s: &Stage, p: &ProjectionSpec, features: &FeatureFrame) -> Result<()> {
    let cfg = &s.config;
    let target = s.input_series(&p.target)?;
    let training = match p.training {
        Some(w) => w,
        None => cfg.training()?,
    };
    let mut runs = BTreeMap::new();
    for &mode in &p.modes {
        log::info!("projecting {} ({mode})", p.name);
        let mut run = published_run(features, &target, training, mode, p.backward_training, &cfg.lasso)?;
        run.series.name = p.name.clone();
        s.artifacts.write_with(&run_file(&p.name, mode, ""), |b| run.series.write_csv(b))?;
        s.artifacts.write_with(&run_file(&p.name, mode, "fits"), |b| run.write_fit_log(b))?;
        s.artifacts
            .write_with(&run_file(&p.name, mode, "weights"), |b| run.write_weights(features.names(), b))?;
        runs.insert(mode, run);
    }
    let rows = diagnostics_rows(&runs, &target, training)?;
    s.artifacts.write_with(&diagnostics_file(&p.name), |b| write_diagnostics_csv(&rows, b))?;

    let main = runs[&p.primary_mode()].series.to_series();
    s.write_series(&format!("series/{}.csv", p.name), &main)?;
    let res = residual(&target, &main, format!("{}-RES", p.name))?;
    s.write_series(&format!("series/{}-RES.csv", p.name), &res)?;
    if let Some(r) = runs.get(&ProjectionMode::Is) {
        s.write_series(&format!("series/{}-IS.csv", p.name), &r.series.to_series())?;
    }
    if let Some(r) = runs.get(&ProjectionMode::Backward) {
        let name = format!("{}-HIST", p.name);
        s.write_series(&format!("series/{name}.csv"), &history(r, features, name.clone())?)?;
    }
    if let Some(name) = &p.weighted_sentiment {
        let frame = read_frame_csv(&s.artifacts.read(TOPIC_SENTIMENT)?[..], "sentiment")?;
        if frame.names() != features.names() {
            return Err(Error::Validation("topic sentiment and attention list different topics".into()));
        }
        let weights = runs[&ProjectionMode::Oos]
            .stale_weights()
            .into_iter()
            .map(|(m, w)| (m, w.weights))
            .collect();
        let sent = sentiment_weighted(&frame, &weights)?;
        s.write_series(&format!("series/{name}.csv"), &TimeSeries::monthly(name.clone(), sent.observations)?)?;
    }
    Ok(())
}

/// A run's fits read back from disk: window end, intercept and dense
/// weights in `topics` order.
pub(super) fn load_fits(s: &Stage, name: &str, mode: ProjectionMode, topics: &[String]) -> Result<Vec<(Month, StaleWeights)>> {
    let what = run_file(name, mode, "fits");
    let header = ["window_end", "lambda", "intercept", "n_selected", "n_positive", "n_negative"];
    let mut fits: Vec<(Month, StaleWeights)> = csv_rows(&s.artifacts.read(&what)?, &header, &what)?
        .iter()
        .map(|r| {
            Ok((
                r[0].parse()?,
                StaleWeights {
                    intercept: parse_f64(&r[2], &what)?,
                    weights: vec![0.0; topics.len()],
                },
            ))
        })
        .collect::<Result<_>>()?;
    let index: BTreeMap<&str, usize> = topics.iter().enumerate().map(|(k, t)| (t.as_str(), k)).collect();
    let what = run_file(name, mode, "weights");
    for r in csv_rows(&s.artifacts.read(&what)?, &["window_end", "topic", "weight"], &what)? {
        let m: Month = r[0].parse()?;
        let k = *index
            .get(&r[1])
            .ok_or_else(|| Error::Validation(format!("{what}: unknown topic {:?}", &r[1])))?;
        let i = fits
            .binary_search_by_key(&m, |f| f.0)
            .map_err(|_| Error::Validation(format!("{what}: no fit for window {m}")))?;
        fits[i].1.weights[k] = parse_f64(&r[2], &what)?;
    }
    Ok(fits)
}

/// Stale weights for every published month of a run.
pub(super) fn load_stale(s: &Stage, name: &str, mode: ProjectionMode, topics: &[String]) -> Result<BTreeMap<Month, StaleWeights>> {
    let fits = load_fits(s, name, mode, topics)?;
    let what = run_file(name, mode, "");
    let series = ProjectionSeries::read_csv(name, &s.artifacts.read(&what)?[..])?;
    series
        .points
        .iter()
        .map(|p| {
            let i = fits
                .binary_search_by_key(&p.window_end, |f| f.0)
                .map_err(|_| Error::Validation(format!("{what}: no fit for window {}", p.window_end)))?;
            Ok((p.date, fits[i].1.clone()))
        })
        .collect()
}
