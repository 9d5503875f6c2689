use std::collections::BTreeMap;

use super::forecast::{probability_file, spec_file, status_file};
use super::project::{diagnostics_file, run_file};
use super::vectorize::{ARTICLES, COUNTS, SENT_LM};
use super::{csv_bytes, csv_rows, decompose, fmt_opt, FeatureSource, Stage};
use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::projector::ProjectionMode;

const DIAGNOSTICS: [&str; 9] = ["column", "beta", "se_beta", "alpha", "se_alpha", "R2", "T", "RMSE", "MAE"];
const BATTERY: [&str; 4] = ["regressor", "coef", "se", "stars"];
const FITS: [&str; 6] = ["window_end", "lambda", "intercept", "n_selected", "n_positive", "n_negative"];

impl Stage {
    fn copy(&self, from: &str, to: &str) -> Result<()> {
        let bytes = self.artifacts.read(from)?;
        self.artifacts.write_bytes(&format!("report/{to}"), &bytes)
    }

    fn series_map(&self, rel: &str) -> Result<BTreeMap<Month, f64>> {
        Ok(self.read_series(rel, "x")?.to_map())
    }
}

/// Wide `date,<col>...` table over the union of months; gaps stay empty.
fn wide(cols: &[(String, BTreeMap<Month, f64>)]) -> Result<Vec<u8>> {
    let mut months: Vec<Month> = cols.iter().flat_map(|c| c.1.keys().copied()).collect();
    months.sort();
    months.dedup();
    let mut header = vec!["date"];
    header.extend(cols.iter().map(|c| c.0.as_str()));
    let rows = months.into_iter().map(|m| {
        let mut r = vec![m.to_string()];
        r.extend(cols.iter().map(|c| fmt_opt(c.1.get(&m).copied())));
        r
    });
    csv_bytes(&header, rows)
}

/// Collects upstream results into one CSV per table and figure under
/// `report/`.
pub fn report(s: &Stage) -> Result<()> {
    let cfg = &s.config;

    let mut table1 = Vec::new();
    for p in &cfg.project {
        let rel = diagnostics_file(&p.name);
        for r in csv_rows(&s.artifacts.read(&rel)?, &DIAGNOSTICS, &rel)? {
            let mut row = vec![p.name.clone()];
            row.extend(r.iter().map(str::to_string));
            table1.push(row);
        }
    }
    let mut header = vec!["projection"];
    header.extend(DIAGNOSTICS);
    s.artifacts.write_bytes("report/table1.csv", &csv_bytes(&header, table1)?)?;

    for t in &cfg.forecast {
        let rel = status_file(&t.table);
        let status = csv_rows(&s.artifacts.read(&rel)?, &["spec", "status", "message"], &rel)?;
        let mut rows = Vec::new();
        for st in status.iter().filter(|r| &r[1] == "ok") {
            let spec = &st[0];
            let rel = spec_file(&t.table, spec);
            for r in csv_rows(&s.artifacts.read(&rel)?, &BATTERY, &rel)? {
                let mut row = vec![spec.to_string()];
                row.extend(r.iter().map(str::to_string));
                rows.push(row);
            }
            let prob = probability_file(&t.table, spec);
            if t.specs.iter().any(|x| &x.name == spec && x.kind == crate::econometrics::ModelKind::Probit) {
                s.copy(&prob, &format!("figure3_{}_{spec}.csv", t.table))?;
            }
        }
        let mut header = vec!["spec"];
        header.extend(BATTERY);
        s.artifacts.write_bytes(&format!("report/{}.csv", t.table), &csv_bytes(&header, rows)?)?;
    }

    for d in &cfg.decompose {
        let l = d.label();
        s.copy(&decompose::file(l, "table3"), &format!("table3_{l}.csv"))?;
        s.copy(&decompose::file(l, "weights"), &format!("figure4_{l}.csv"))?;
        s.copy(&decompose::file(l, "series"), &format!("figure5_{l}.csv"))?;
        if !d.events.is_empty() || d.recession.is_some() {
            s.copy(&decompose::file(l, "events"), &format!("table8_{l}.csv"))?;
        }
    }

    if !cfg.vectorize.articles.is_empty() {
        s.copy(ARTICLES, "articles.csv")?;
    }
    s.copy(COUNTS, "figure1_articles.csv")?;

    let mut sentiment = vec![(SENT_LM.to_string(), s.series_map(&format!("series/{SENT_LM}.csv"))?)];
    for p in &cfg.project {
        let mode = p.primary_mode();
        let rel = run_file(&p.name, mode, "fits");
        let rows = csv_rows(&s.artifacts.read(&rel)?, &FITS, &rel)?
            .into_iter()
            .map(|r| [0, 1, 3, 4, 5].map(|i| r[i].to_string()));
        s.artifacts.write_bytes(
            &format!("report/figure1_lasso_{}.csv", p.name),
            &csv_bytes(&["window_end", "lambda", "n_selected", "n_positive", "n_negative"], rows)?,
        )?;

        let mut cols = vec![(p.target.clone(), s.input_series(&p.target)?.to_map())];
        for mode in [ProjectionMode::Is, ProjectionMode::Oos] {
            if p.modes.contains(&mode) {
                let rel = run_file(&p.name, mode, "");
                let rows = csv_rows(&s.artifacts.read(&rel)?, &["date", "value", "mode", "window_end"], &rel)?;
                let map = rows
                    .iter()
                    .map(|r| Ok((r[0].parse()?, super::parse_f64(&r[1], &rel)?)))
                    .collect::<Result<_>>()?;
                cols.push((mode.to_string(), map));
            }
        }
        s.artifacts.write_bytes(&format!("report/figure2_{}.csv", p.name), &wide(&cols)?)?;

        if p.modes.contains(&ProjectionMode::Backward) {
            s.copy(&format!("series/{}-HIST.csv", p.name), &format!("figure7_{}.csv", p.name))?;
        }
        if let Some(w) = &p.weighted_sentiment {
            sentiment.push((w.clone(), s.series_map(&format!("series/{w}.csv"))?));
        }
        if p.features == FeatureSource::SentimentLm {
            sentiment.push((p.name.clone(), s.series_map(&format!("series/{}.csv", p.name))?));
        }
    }
    if sentiment.iter().map(|c| &c.0).collect::<std::collections::BTreeSet<_>>().len() != sentiment.len() {
        return Err(Error::Config("sentiment series names collide".into()));
    }
    s.artifacts.write_bytes("report/figure6_sentiment.csv", &wide(&sentiment)?)?;
    Ok(())
}
