use std::collections::BTreeMap;
use std::path::PathBuf;

use super::{csv_bytes, DecomposeSpec, FeatureSource, Inputs, ProjectionSpec, RunConfig, SeriesInput, Stage, TableSpec, VectorizeSpec};
use crate::attribution::Event;
use crate::calendar::{Frequency, Window};
use crate::econometrics::ForecastSpec;
use crate::error::{Error, Result};
use crate::ingest::{write_corpus, write_series_csv};
use crate::lasso::LassoConfig;
use crate::projector::ProjectionMode;
use crate::series::TransformKind;
use crate::syndata::{generate, SynthConfig};
use crate::text::write_attention_csv;

pub const RUN_CONFIG: &str = "run.toml";

const SERIES: [(&str, Frequency, TransformKind); 9] = [
    ("BAA", Frequency::Monthly, TransformKind::Level),
    ("EBP", Frequency::Monthly, TransformKind::Level),
    ("EMP", Frequency::Monthly, TransformKind::LogDifference),
    ("GDP", Frequency::Quarterly, TransformKind::LogDifference),
    ("GZF", Frequency::Monthly, TransformKind::Level),
    ("NBER", Frequency::Monthly, TransformKind::Level),
    ("TBILL", Frequency::Monthly, TransformKind::Level),
    ("TS", Frequency::Monthly, TransformKind::Level),
    ("UER", Frequency::Monthly, TransformKind::ArithmeticDifference),
];

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn clamp(mut s: ForecastSpec, group: &str) -> ForecastSpec {
    s.clamp_group = Some(group.into());
    s
}

/// The batteries run on generated data: macro forecasts, sentiment,
/// metatopic and historical regressions.
fn batteries(history: bool) -> Vec<TableSpec> {
    let main = ["EBP_hat", "GZF", "EBP_hat-RES", "controls"];
    let mut table2 = Vec::new();
    for (dep, short, horizons) in [("EMP", "emp", [3, 12]), ("UER", "uer", [3, 12]), ("GDP", "gdp", [1, 4])] {
        for h in horizons {
            table2.push(clamp(ForecastSpec::ols(format!("{short}_h{h}"), dep, h, &main), short));
        }
    }
    for h in [3, 12] {
        table2.push(clamp(ForecastSpec::probit(format!("rec_h{h}"), "NBER", h, &main), "rec"));
    }
    let mut tables = vec![TableSpec {
        table: "table2".into(),
        specs: table2,
    }];
    tables.push(TableSpec {
        table: "table4".into(),
        specs: vec![
            ForecastSpec::ols("emp_h3", "EMP", 3, &["EBP_hat-metatopics", "GZF", "EBP_hat-RES", "controls"]),
            ForecastSpec::ols("uer_h3", "UER", 3, &["EBP_hat-metatopics", "GZF", "EBP_hat-RES", "controls"]),
        ],
    });
    tables.push(TableSpec {
        table: "table5".into(),
        specs: ["SENT-LM", "SENT-A", "EBP_hathat"]
            .into_iter()
            .map(|x| ForecastSpec::ols(format!("emp_{x}"), "EMP", 3, &[x, "GZF", "controls"]))
            .collect(),
    });
    tables.push(TableSpec {
        table: "table6".into(),
        specs: ["SENT-LM", "SENT-A"]
            .into_iter()
            .map(|x| ForecastSpec::ols(format!("emp_{x}"), "EMP", 3, &["EBP_hat", x, "GZF", "controls"]))
            .collect(),
    });
    if history {
        let hist = ["EBP_hat-HIST", "BAA", "TBILL"];
        let mut gdp = ForecastSpec::ols("gdp_h1", "GDP", 1, &hist);
        gdp.lags = Some(4);
        tables.push(TableSpec {
            table: "table7".into(),
            specs: vec![ForecastSpec::ols("emp_h3", "EMP", 3, &hist), gdp],
        });
    }
    tables
}

/// A run config over the files `synth` writes, with the training window on
/// the first 60% of target months.
pub fn synth_run_config(cfg: &SynthConfig) -> Result<RunConfig> {
    let training_len = (cfg.months * 3 / 5).max(1) as i32;
    let training = Window::new(cfg.start, cfg.start.offset(training_len - 1))?;
    let history = cfg.history_months > 0;
    let mut modes = vec![ProjectionMode::Is, ProjectionMode::Oos];
    if history {
        modes.push(ProjectionMode::Backward);
    }
    let events = if history {
        let first = cfg.first_month();
        let h = cfg.history_months as i32;
        vec![
            Event {
                name: "Panic A".into(),
                date: first.offset(h / 3),
            },
            Event {
                name: "Panic B".into(),
                date: first.offset(2 * h / 3),
            },
        ]
    } else {
        Vec::new()
    };
    Ok(RunConfig {
        seed: cfg.seed,
        out: Some(PathBuf::from("run")),
        inputs: Some(Inputs {
            corpus: "corpus.jsonl".into(),
            dictionary: "dictionary.json".into(),
            positive: "positive.txt".into(),
            negative: "negative.txt".into(),
            metatopics: Some("metatopics.json".into()),
            stopwords: None,
            series: SERIES
                .iter()
                .map(|&(name, frequency, transform)| SeriesInput {
                    name: name.into(),
                    path: format!("macro/{name}.csv").into(),
                    frequency,
                    transform,
                })
                .collect(),
        }),
        training: Some(training),
        vectorize: VectorizeSpec {
            articles: vec![cfg.start.offset(cfg.months as i32 / 2)],
            articles_per_group: Some(3),
        },
        lasso: LassoConfig::default(),
        project: vec![
            ProjectionSpec {
                name: "EBP_hat".into(),
                target: "EBP".into(),
                features: FeatureSource::Attention,
                modes,
                training: None,
                backward_training: None,
                weighted_sentiment: Some("SENT-A".into()),
            },
            ProjectionSpec {
                name: "EBP_hathat".into(),
                target: "EBP".into(),
                features: FeatureSource::SentimentLm,
                modes: vec![ProjectionMode::Oos],
                training: None,
                backward_training: None,
                weighted_sentiment: None,
            },
        ],
        decompose: vec![DecomposeSpec {
            name: None,
            projection: "EBP_hat".into(),
            metatopics: None,
            events,
            recession: Some("NBER".into()),
            lookback: 12,
        }],
        groups: BTreeMap::from([("controls".to_string(), strings(&["TS", "TBILL"]))]),
        forecast: batteries(history),
        synth: None,
        base: PathBuf::new(),
    })
}

/// Writes a generated corpus, dictionary, lexicons, metatopic map, macro
/// series, the planted truth and `run.toml`.
pub fn synth(s: &Stage) -> Result<()> {
    let mut cfg = s.config.synth.clone().ok_or_else(|| Error::Config("no [synth] table".into()))?;
    cfg.seed = s.config.seed;
    let b = generate(&cfg)?;
    let a = &s.artifacts;
    a.write_with("corpus.jsonl", |buf| {
        write_corpus(&b.corpus.documents, buf).map_err(|e| Error::io("corpus.jsonl", e))
    })?;
    a.write_bytes("dictionary.json", (b.corpus.dictionary.to_json() + "\n").as_bytes())?;
    a.write_bytes("positive.txt", (b.corpus.positive.join("\n") + "\n").as_bytes())?;
    a.write_bytes("negative.txt", (b.corpus.negative.join("\n") + "\n").as_bytes())?;
    a.write_bytes("metatopics.json", (b.metatopics.to_json() + "\n").as_bytes())?;
    for m in &b.macro_series {
        a.write_with(&format!("macro/{}.csv", m.name), |buf| write_series_csv(m, buf))?;
    }
    let names = cfg.topic_names();
    let planted = b
        .attention
        .planted
        .iter()
        .map(|&k| [names[k].clone(), b.attention.weights[k].to_string()]);
    a.write_bytes("truth/planted.csv", &csv_bytes(&["topic", "weight"], planted)?)?;
    a.write_with("truth/signal.csv", |buf| write_series_csv(&b.attention.signal, buf))?;
    a.write_with("truth/attention.csv", |buf| write_attention_csv(&b.attention.attention, buf))?;
    let run = synth_run_config(&cfg)?;
    a.write_bytes(RUN_CONFIG, run.to_toml()?.as_bytes())?;
    Ok(())
}
