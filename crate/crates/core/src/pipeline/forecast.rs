use super::{csv_bytes, csv_rows, decompose, Stage};
use crate::econometrics::{run_forecast_battery, write_battery_csv, BatteryData, ModelKind};
use crate::error::{Error, Result};

pub(super) fn spec_file(table: &str, spec: &str) -> String {
    format!("forecast/{table}/{spec}.csv")
}

pub(super) fn probability_file(table: &str, spec: &str) -> String {
    format!("forecast/{table}/{spec}_probability.csv")
}

pub(super) fn status_file(table: &str) -> String {
    format!("forecast/{table}/status.csv")
}

/// Input series, every derived series under `series/`, and a
/// `<label>-metatopics` group per decomposition.
pub(super) fn battery_data(s: &Stage) -> Result<BatteryData> {
    let cfg = &s.config;
    let mut data = BatteryData::default();
    for si in &cfg.inputs()?.series {
        data.insert(s.input_series(&si.name)?);
    }
    for p in &cfg.project {
        s.artifacts.require(&format!("series/{}.csv", p.name))?;
    }
    let dir = s.artifacts.path("series");
    let mut names = Vec::new();
    if dir.is_dir() {
        for e in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let p = e.map_err(|e| Error::io(&dir, e))?.path();
            if p.extension().is_some_and(|x| x == "csv") {
                if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                    names.push(stem.to_string());
                }
            }
        }
    }
    names.sort();
    for n in names {
        if data.series.contains_key(&n) {
            return Err(Error::Config(format!("derived series {n} shadows an input series")));
        }
        data.insert(s.read_series(&format!("series/{n}.csv"), &n)?);
    }
    for d in &cfg.decompose {
        let rel = decompose::file(d.label(), "table3");
        let rows = csv_rows(&s.artifacts.read(&rel)?, &["metatopic", "explained_variance", "raw_weight"], &rel)?;
        let members = rows.iter().map(|r| format!("{}-{}", d.label(), &r[0])).collect();
        data.groups.insert(format!("{}-metatopics", d.label()), members);
    }
    data.groups.extend(cfg.groups.clone());
    Ok(data)
}

/// Runs every configured battery. All tables are written before the first
/// failing spec, if any, is returned.
pub fn forecast(s: &Stage) -> Result<()> {
    if s.config.forecast.is_empty() {
        return Ok(());
    }
    let data = battery_data(s)?;
    let mut first_err = None;
    for t in &s.config.forecast {
        let mut status = Vec::new();
        for (spec, out) in t.specs.iter().zip(run_forecast_battery(&t.specs, &data)) {
            match out.result {
                Ok(fit) => {
                    s.artifacts.write_with(&spec_file(&t.table, &spec.name), |b| write_battery_csv(&fit, b))?;
                    if fit.kind == ModelKind::Probit {
                        let rows = fit.months.iter().zip(&fit.fitted).map(|(m, p)| [m.to_string(), p.to_string()]);
                        s.artifacts
                            .write_bytes(&probability_file(&t.table, &spec.name), &csv_bytes(&["date", "probability"], rows)?)?;
                    }
                    status.push([spec.name.clone(), "ok".into(), String::new()]);
                }
                Err(e) => {
                    log::error!("table {} spec {}: {e}", t.table, spec.name);
                    status.push([spec.name.clone(), "failed".into(), e.to_string()]);
                    first_err.get_or_insert(e);
                }
            }
        }
        s.artifacts
            .write_bytes(&status_file(&t.table), &csv_bytes(&["spec", "status", "message"], status)?)?;
    }
    first_err.map_or(Ok(()), Err)
}
