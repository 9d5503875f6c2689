use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::Event;
use crate::calendar::{Frequency, Month, Window};
use crate::econometrics::ForecastSpec;
use crate::error::{Error, Result};
use crate::lasso::LassoConfig;
use crate::projector::ProjectionMode;
use crate::series::TransformKind;
use crate::syndata::SynthConfig;

/// A whole pipeline run, read from one TOML file. Relative paths resolve
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Inputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<Window>,
    #[serde(default)]
    pub vectorize: VectorizeSpec,
    #[serde(default)]
    pub lasso: LassoConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub project: Vec<ProjectionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decompose: Vec<DecomposeSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forecast: Vec<TableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// JSON-lines corpus.
    pub corpus: PathBuf,
    pub dictionary: PathBuf,
    pub positive: PathBuf,
    pub negative: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metatopics: Option<PathBuf>,
    /// Replaces the bundled stopword list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub series: Vec<SeriesInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesInput {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "monthly")]
    pub frequency: Frequency,
    #[serde(default = "level")]
    pub transform: TransformKind,
}

fn monthly() -> Frequency {
    Frequency::Monthly
}

fn level() -> TransformKind {
    TransformKind::Level
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizeSpec {
    /// Months for which to rank representative articles.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub articles: Vec<Month>,
    /// Articles kept per metatopic.
    pub articles_per_group: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    #[default]
    Attention,
    /// The single monthly `SENT-LM` column.
    SentimentLm,
}

/// One projected series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    pub name: String,
    /// Name of an input series.
    pub target: String,
    #[serde(default)]
    pub features: FeatureSource,
    #[serde(default = "default_modes")]
    pub modes: Vec<ProjectionMode>,
    /// Overrides the run's training window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<Window>,
    /// Window of the single BACKWARD fit; defaults to every month with both
    /// attention and a target value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward_training: Option<Window>,
    /// Emit the topic-sentiment aggregate under this name, using the OOS
    /// run's weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_sentiment: Option<String>,
}

fn default_modes() -> Vec<ProjectionMode> {
    vec![ProjectionMode::Is, ProjectionMode::Oos]
}

impl ProjectionSpec {
    /// The run whose values form the main series.
    pub fn primary_mode(&self) -> ProjectionMode {
        if self.modes.contains(&ProjectionMode::Oos) {
            ProjectionMode::Oos
        } else {
            ProjectionMode::Is
        }
    }
}

/// Metatopic decomposition of one projection's OOS run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSpec {
    /// Output label; defaults to the projection name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub projection: String,
    /// Overrides `inputs.metatopics`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metatopics: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
    /// 0/1 input series whose recession starts form a pooled row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recession: Option<String>,
    #[serde(default = "twelve")]
    pub lookback: usize,
}

fn twelve() -> usize {
    12
}

impl DecomposeSpec {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.projection)
    }
}

/// A battery of forecasting regressions reported together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub table: String,
    pub specs: Vec<ForecastSpec>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn label_ok(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => bad(format!("config file {} not found", path.display())),
            _ => Error::io(path, e),
        })?;
        Self::parse(&text, path)
    }

    /// Parses TOML text as if read from `path`.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| bad(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn inputs(&self) -> Result<&Inputs> {
        self.inputs.as_ref().ok_or_else(|| bad("no [inputs] table"))
    }

    pub fn training(&self) -> Result<Window> {
        self.training.ok_or_else(|| bad("no [training] window"))
    }

    pub fn series_input(&self, name: &str) -> Result<&SeriesInput> {
        self.inputs()?
            .series
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| bad(format!("no input series named {name:?}")))
    }

    pub fn projection(&self, name: &str) -> Result<&ProjectionSpec> {
        self.project
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| bad(format!("no projection named {name:?}")))
    }

    fn require_file(&self, what: &str, p: &Path) -> Result<()> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(bad(format!("{what} {} does not exist", full.display())))
        }
    }

    /// Path existence, window order and name uniqueness.
    pub fn validate(&self) -> Result<()> {
        if let Some(inp) = &self.inputs {
            self.require_file("corpus", &inp.corpus)?;
            self.require_file("dictionary", &inp.dictionary)?;
            self.require_file("positive lexicon", &inp.positive)?;
            self.require_file("negative lexicon", &inp.negative)?;
            if let Some(p) = &inp.metatopics {
                self.require_file("metatopic map", p)?;
            }
            if let Some(p) = &inp.stopwords {
                self.require_file("stopword list", p)?;
            }
            let mut seen = BTreeSet::new();
            for s in &inp.series {
                if !label_ok(&s.name) || !seen.insert(&s.name) {
                    return Err(bad(format!("series name {:?} is empty, malformed or repeated", s.name)));
                }
                self.require_file(&format!("series {}", s.name), &s.path)?;
            }
        }
        if let Some(w) = self.training {
            Window::new(w.start, w.end).map_err(|_| bad(format!("training window {}..{} is not ordered", w.start, w.end)))?;
        }
        let mut names = BTreeSet::new();
        for p in &self.project {
            if !label_ok(&p.name) || !names.insert(p.name.as_str()) {
                return Err(bad(format!("projection name {:?} is empty, malformed or repeated", p.name)));
            }
            self.series_input(&p.target)?;
            if p.modes.is_empty() {
                return Err(bad(format!("projection {} has no modes", p.name)));
            }
            if let Some(w) = p.training {
                Window::new(w.start, w.end).map_err(|_| bad(format!("projection {}: training window is not ordered", p.name)))?;
            } else {
                self.training()?;
            }
            if let Some(w) = p.backward_training {
                Window::new(w.start, w.end).map_err(|_| bad(format!("projection {}: backward window is not ordered", p.name)))?;
            }
            if p.weighted_sentiment.is_some() && (p.features != FeatureSource::Attention || !p.modes.contains(&ProjectionMode::Oos)) {
                return Err(bad(format!("projection {}: weighted sentiment needs attention features and an OOS run", p.name)));
            }
            if let Some(s) = &p.weighted_sentiment {
                if !label_ok(s) {
                    return Err(bad(format!("projection {}: malformed sentiment name {s:?}", p.name)));
                }
            }
        }
        let mut labels = BTreeSet::new();
        for d in &self.decompose {
            let p = self.projection(&d.projection)?;
            if p.features != FeatureSource::Attention || !p.modes.contains(&ProjectionMode::Oos) {
                return Err(bad(format!("decomposition of {} needs attention features and an OOS run", p.name)));
            }
            if !label_ok(d.label()) || !labels.insert(d.label()) {
                return Err(bad(format!("decomposition label {:?} is malformed or repeated", d.label())));
            }
            match (&d.metatopics, self.inputs.as_ref().and_then(|i| i.metatopics.as_ref())) {
                (Some(m), _) => self.require_file("metatopic map", m)?,
                (None, Some(_)) => {}
                (None, None) => return Err(bad(format!("decomposition {} has no metatopic map", d.label()))),
            }
            if let Some(r) = &d.recession {
                self.series_input(r)?;
            }
            if d.lookback == 0 {
                return Err(bad("event lookback must be positive"));
            }
        }
        let mut tables = BTreeSet::new();
        for t in &self.forecast {
            if !label_ok(&t.table) || !tables.insert(t.table.as_str()) {
                return Err(bad(format!("forecast table {:?} is malformed or repeated", t.table)));
            }
            let mut specs = BTreeSet::new();
            for s in &t.specs {
                if !label_ok(&s.name) || !specs.insert(s.name.as_str()) {
                    return Err(bad(format!("table {}: spec name {:?} is malformed or repeated", t.table, s.name)));
                }
            }
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        Ok(())
    }
}
