//! Config-driven stages behind the `textspread` command line. Each stage
//! reads upstream artifacts from the output directory, writes its own files
//! atomically and merges their hashes into `manifest.json`.

mod artifacts;
mod config;
mod decompose;
mod forecast;
mod project;
mod report;
mod synth;
mod vectorize;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use artifacts::{sha256_hex, Artifacts, Manifest, MANIFEST};
pub use config::{
    DecomposeSpec, FeatureSource, Inputs, ProjectionSpec, RunConfig, SeriesInput, TableSpec, VectorizeSpec,
};
pub use decompose::decompose;
pub use forecast::forecast;
pub use project::{diagnostics_rows, project, published_run};
pub use report::report;
pub use synth::{synth, synth_run_config};
pub use vectorize::vectorize;

use crate::calendar::Frequency;
use crate::error::{Error, Result};
use crate::ingest::{parse_macro, write_series_csv};
use crate::series::{TimeSeries, TransformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Vectorize,
    Project,
    Decompose,
    Forecast,
    Report,
    Synth,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Vectorize,
        Command::Project,
        Command::Decompose,
        Command::Forecast,
        Command::Report,
        Command::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Vectorize => "vectorize",
            Command::Project => "project",
            Command::Decompose => "decompose",
            Command::Forecast => "forecast",
            Command::Report => "report",
            Command::Synth => "synth",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

/// A loaded config bound to an output directory.
#[derive(Debug)]
pub struct Stage {
    pub config: RunConfig,
    pub artifacts: Artifacts,
    config_sha256: String,
}

impl Stage {
    /// `out` and `seed` override the config's values.
    pub fn open(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let bytes = std::fs::read(config_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", config_path.display())),
            _ => Error::io(config_path, e),
        })?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", config_path.display())))?;
        let mut config = RunConfig::parse(&text, config_path)?;
        if let Some(s) = seed {
            config.seed = s;
        }
        let root: PathBuf = match (out, &config.out) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => config.resolve(o),
            (None, None) => return Err(Error::Config("no output directory: pass --out or set `out`".into())),
        };
        Ok(Stage {
            config,
            artifacts: Artifacts::new(root)?,
            config_sha256: sha256_hex(&bytes),
        })
    }

    pub fn finish(&self) -> Result<Manifest> {
        self.artifacts.commit(&self.config_sha256, self.config.seed)
    }

    /// Reads a configured input, recording its hash under the path as
    /// written in the config.
    fn input(&self, p: &Path) -> Result<Vec<u8>> {
        let full = self.config.resolve(p);
        self.artifacts.read_input(&p.to_string_lossy(), &full)
    }

    fn input_series(&self, name: &str) -> Result<TimeSeries> {
        let s = self.config.series_input(name)?;
        let bytes = self.input(&s.path)?;
        parse_macro(&bytes[..], &s.name, s.frequency, s.transform)
    }

    fn write_series(&self, rel: &str, s: &TimeSeries) -> Result<()> {
        self.artifacts.write_with(rel, |b| write_series_csv(s, b))
    }

    fn read_series(&self, rel: &str, name: &str) -> Result<TimeSeries> {
        let bytes = self.artifacts.read(rel)?;
        parse_macro(&bytes[..], name, Frequency::Monthly, TransformKind::Level)
    }
}

/// Validates the config, runs one stage and commits the manifest.
pub fn run(cmd: Command, config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Manifest> {
    let stage = Stage::open(config_path, out, seed)?;
    if cmd == Command::Synth {
        if stage.config.synth.is_none() {
            return Err(Error::Config("no [synth] table".into()));
        }
    } else {
        stage.config.validate()?;
    }
    log::info!("{cmd}: writing to {}", stage.artifacts.root().display());
    let result = match cmd {
        Command::Vectorize => vectorize(&stage),
        Command::Project => project(&stage),
        Command::Decompose => decompose(&stage),
        Command::Forecast => forecast(&stage),
        Command::Report => report(&stage),
        Command::Synth => synth(&stage),
    };
    // Files written before a failure stay listed.
    let manifest = stage.finish()?;
    result.map(|_| manifest)
}

/// Plain CSV from a header and rows.
fn csv_bytes<I, R, S>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let err = |e: csv::Error| Error::Validation(format!("writing csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Validation(format!("writing csv: {e}")))
}

/// Rows of a CSV with the expected header.
fn csv_rows(bytes: &[u8], header: &[&str], what: &str) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(bytes);
    let h = r.headers().map_err(|e| Error::Validation(format!("{what}: {e}")))?;
    if h.iter().ne(header.iter().copied()) {
        return Err(Error::Validation(format!("{what}: expected header {}", header.join(","))));
    }
    r.records()
        .map(|rec| rec.map_err(|e| Error::Validation(format!("{what}: {e}"))))
        .collect()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| Error::Validation(format!("{what}: bad number {s:?}")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}
