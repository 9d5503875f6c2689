#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

pub const STAGES: [&str; 5] = ["vectorize", "project", "decompose", "forecast", "report"];

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synth.toml")
}

pub fn textspread(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_textspread"));
    c.args(args);
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("spawn textspread")
}

pub fn ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// `synth` into `dir`, then every stage on the generated `run.toml`.
/// Returns the run config path.
pub fn full_pipeline(config: &Path, dir: &Path, envs: &[(&str, &str)]) -> PathBuf {
    let d = dir.to_str().unwrap();
    ok(&textspread(&["synth", "--config", config.to_str().unwrap(), "--out", d], envs), "synth");
    let run = dir.join("run.toml");
    for stage in STAGES {
        ok(&textspread(&[stage, "--config", run.to_str().unwrap()], envs), stage);
    }
    run
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn tree_hashes(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, hex::encode(Sha256::digest(fs::read(&p).unwrap())));
            }
        }
    }
    out
}

fn glob_match(pattern: &str, name: &str) -> bool {
    match pattern.split_once('*') {
        Some((pre, post)) => name.len() >= pre.len() + post.len() && name.starts_with(pre) && name.ends_with(post),
        None => pattern == name,
    }
}

fn check_cell(kind: &str, spec: &Value, cell: &str) -> Result<(), String> {
    let bad = || Err(format!("{cell:?} is not {kind}"));
    match kind {
        "label" if !cell.is_empty() => Ok(()),
        "number" if cell.parse::<f64>().is_ok_and(f64::is_finite) => Ok(()),
        "number_or_empty" if cell.is_empty() || cell.parse::<f64>().is_ok_and(f64::is_finite) => Ok(()),
        "integer" if cell.parse::<u64>().is_ok() => Ok(()),
        "enum" if spec["values"].as_array().unwrap().iter().any(|v| v == cell) => Ok(()),
        _ => bad(),
    }
}

/// Checks one CSV against a schema: exact header, typed cells, required row
/// keys and an optional column total.
pub fn check_csv(schema: &Value, path: &Path) -> Result<usize, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let cols = schema["columns"].as_array().unwrap();
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    let want: Vec<&str> = cols.iter().map(|c| c["name"].as_str().unwrap()).collect();
    if header != want {
        return Err(format!("header {header:?}, expected {want:?}"));
    }
    let mut seen: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut total = 0.0;
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows += 1;
        for (c, cell) in cols.iter().zip(rec.iter()) {
            let name = c["name"].as_str().unwrap();
            check_cell(c["type"].as_str().unwrap(), c, cell).map_err(|e| format!("row {rows} column {name}: {e}"))?;
            seen.entry(name).or_default().push(cell.to_string());
            if schema["sum"]["column"] == name {
                total += cell.parse::<f64>().unwrap();
            }
        }
    }
    if rows == 0 {
        return Err("no rows".into());
    }
    if let Some(req) = schema["required"].as_object() {
        for (col, keys) in req {
            for k in keys.as_array().unwrap() {
                let k = k.as_str().unwrap();
                if !seen.get(col.as_str()).is_some_and(|v| v.iter().any(|x| x == k)) {
                    return Err(format!("no row with {col} = {k:?}"));
                }
            }
        }
    }
    if let Some(v) = schema["sum"]["value"].as_f64() {
        if (total - v).abs() > 1e-9 {
            return Err(format!("{} sums to {total}", schema["sum"]["column"]));
        }
    }
    Ok(rows)
}

/// Every checked-in schema against the matching files in `report`. Returns
/// the table names checked.
pub fn check_schemas(report: &Path) -> Result<Vec<String>, String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/schemas");
    let mut names: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    let mut checked = Vec::new();
    for schema_path in names {
        let schema: Value = serde_json::from_slice(&fs::read(&schema_path).unwrap()).unwrap();
        let pattern = schema["file"].as_str().unwrap();
        let mut files: Vec<PathBuf> = fs::read_dir(report)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| glob_match(pattern, &p.file_name().unwrap().to_string_lossy()))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(format!("no report file matches {pattern}"));
        }
        for f in files {
            check_csv(&schema, &f).map_err(|e| format!("{}: {e}", f.display()))?;
            checked.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    Ok(checked)
}
