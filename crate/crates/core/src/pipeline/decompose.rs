use super::project::{load_fits, load_stale};
use super::vectorize::ATTENTION;
use super::{csv_bytes, DecomposeSpec, Stage};
use crate::attribution::{event_window_average, explained_variance, metatopic_series, metatopic_weights, rolling_metatopic_weights};
use crate::econometrics::recession_starts;
use crate::error::{Error, Result};
use crate::ingest::MetatopicMap;
use crate::projector::ProjectionMode;
use crate::series::FeatureFrame;
use crate::text::read_attention_csv;

pub(super) fn file(label: &str, what: &str) -> String {
    format!("decompose/{label}_{what}.csv")
}

/// Metatopic weights, explained variance, per-metatopic series and event
/// windows for every configured decomposition.
pub fn decompose(s: &Stage) -> Result<()> {
    if s.config.decompose.is_empty() {
        return Ok(());
    }
    let attention = read_attention_csv(&s.artifacts.read(ATTENTION)?[..])?;
    for d in &s.config.decompose {
        decompose_one(s, d, &attention)?;
    }
    Ok(())
}

fn decompose_one(s: &Stage, d: &DecomposeSpec, attention: &FeatureFrame) -> Result<()> {
    let cfg = &s.config;
    let p = cfg.projection(&d.projection)?;
    let label = d.label();
    let map_path = match (&d.metatopics, cfg.inputs()?.metatopics.as_ref()) {
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(Error::Config(format!("decomposition {label} has no metatopic map"))),
    };
    let map = MetatopicMap::from_reader(&s.input(map_path)?[..])?;
    let topics = attention.names();
    let partition = map.partition(topics)?;

    let stale = load_stale(s, &p.name, ProjectionMode::Oos, topics)?;
    let dec = metatopic_series(attention, &stale, &partition)?;
    let mut rows = Vec::new();
    for (i, m) in dec.months.iter().enumerate() {
        for (name, v) in dec.metatopics.iter().zip(dec.row(i)) {
            rows.push([m.to_string(), name.clone(), v.to_string()]);
        }
    }
    s.artifacts
        .write_bytes(&file(label, "series"), &csv_bytes(&["date", "metatopic", "value"], rows)?)?;
    for (j, name) in dec.metatopics.iter().enumerate() {
        let series = dec.series(j).with_name(format!("{label}-{name}"));
        s.write_series(&format!("series/{label}-{name}.csv"), &series)?;
    }

    let fits = load_fits(s, &p.name, ProjectionMode::Oos, topics)?;
    let paths: Vec<_> = fits.iter().map(|(m, w)| (*m, w.weights.clone())).collect();
    let mut rows = Vec::new();
    for (m, w) in rolling_metatopic_weights(&paths, &partition) {
        for (name, v) in dec.metatopics.iter().zip(w) {
            rows.push([m.to_string(), name.clone(), v.to_string()]);
        }
    }
    s.artifacts
        .write_bytes(&file(label, "weights"), &csv_bytes(&["window_end", "metatopic", "weight"], rows)?)?;

    // Full-sample weights: the last in-sample refit when there is one.
    let full = if p.modes.contains(&ProjectionMode::Is) {
        load_fits(s, &p.name, ProjectionMode::Is, topics)?
    } else {
        fits
    };
    let (end, last) = full.last().ok_or_else(|| Error::Validation(format!("projection {} has no fits", p.name)))?;
    let start = p.training.unwrap_or(cfg.training()?).start;
    let sample = attention.filter_months(|m| start <= m && m <= *end);
    let ev = explained_variance(&sample, &last.weights, &partition)?;
    let raw = metatopic_weights(&last.weights, &partition);
    let rows = ev
        .iter()
        .zip(&raw)
        .map(|((name, h), (_, w))| [name.clone(), h.to_string(), w.to_string()]);
    s.artifacts.write_bytes(
        &file(label, "table3"),
        &csv_bytes(&["metatopic", "explained_variance", "raw_weight"], rows)?,
    )?;

    if !d.events.is_empty() || d.recession.is_some() {
        let hist = format!("series/{}-HIST.csv", p.name);
        let series = if p.modes.contains(&ProjectionMode::Backward) {
            s.read_series(&hist, &p.name)?
        } else {
            s.read_series(&format!("series/{}.csv", p.name), &p.name)?
        };
        let starts = match &d.recession {
            Some(r) => recession_starts(&s.input_series(r)?),
            None => Vec::new(),
        };
        let rows = event_window_average(&series, &d.events, &starts, d.lookback)
            .into_iter()
            .map(|w| [w.event, w.window_mean.to_string()]);
        s.artifacts
            .write_bytes(&file(label, "events"), &csv_bytes(&["event", "window_mean"], rows)?)?;
    }
    Ok(())
}
