//! Dictionary polarity: raw monthly tone, topic-level tone, and the
//! projection-weighted aggregate.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::series::FeatureFrame;
use crate::text::{article_attention, lemmatize, TermMatcher, TokenizedMonth};

/// Positive and negative word sets, stored as lemmas so they match
/// preprocessed tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl SentimentLexicon {
    pub fn new<P, N>(positive: P, negative: N) -> Result<Self>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        N: IntoIterator,
        N::Item: AsRef<str>,
    {
        let norm = |w: &str| {
            let w = w.trim().to_lowercase();
            (!w.is_empty()).then(|| lemmatize(&w))
        };
        let positive: HashSet<String> = positive.into_iter().filter_map(|w| norm(w.as_ref())).collect();
        let negative: HashSet<String> = negative.into_iter().filter_map(|w| norm(w.as_ref())).collect();
        let mut both: Vec<&String> = positive.intersection(&negative).collect();
        if !both.is_empty() {
            both.sort();
            return Err(Error::Validation(format!("lexicon words are both positive and negative: {both:?}")));
        }
        Ok(SentimentLexicon { positive, negative })
    }

    /// Reads `positive.txt` / `negative.txt` style files, one token per line.
    pub fn load(positive: impl AsRef<Path>, negative: impl AsRef<Path>) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let pos = read(positive.as_ref())?;
        let neg = read(negative.as_ref())?;
        Self::new(pos.lines(), neg.lines())
    }

    /// Counts `(c+, c-)` in a token list.
    pub fn counts(&self, tokens: &[String]) -> (u64, u64) {
        let mut pos = 0;
        let mut neg = 0;
        for t in tokens {
            if self.positive.contains(t) {
                pos += 1;
            } else if self.negative.contains(t) {
                neg += 1;
            }
        }
        (pos, neg)
    }
}

/// Polarity `(c+ - c-)/(c+ + c-)`. The flag is set when no sentiment word was
/// found, in which case the value is 0.
pub fn polarity(pos: u64, neg: u64) -> (f64, bool) {
    if pos + neg == 0 {
        (0.0, true)
    } else {
        ((pos as f64 - neg as f64) / (pos + neg) as f64, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentimentKind {
    Lm,
    TopicWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentSeries {
    pub kind: SentimentKind,
    pub observations: Vec<(Month, f64)>,
    /// Months scored 0 because no sentiment word occurred.
    pub flagged: Vec<Month>,
}

/// Raw monthly polarity of pooled tokens.
pub fn sentiment_lm(tokens: &[String], lexicon: &SentimentLexicon) -> (f64, bool) {
    let (p, n) = lexicon.counts(tokens);
    polarity(p, n)
}

pub fn monthly_sentiment_lm(months: &[TokenizedMonth], lexicon: &SentimentLexicon) -> SentimentSeries {
    let scored: Vec<(Month, f64, bool)> = months
        .par_iter()
        .map(|tm| {
            let (v, flag) = sentiment_lm(&tm.tokens, lexicon);
            (tm.month, v, flag)
        })
        .collect();
    SentimentSeries {
        kind: SentimentKind::Lm,
        flagged: scored.iter().filter(|s| s.2).map(|s| s.0).collect(),
        observations: scored.into_iter().map(|(m, v, _)| (m, v)).collect(),
    }
}

/// Per-article polarity weighted by article topic shares,
/// `s_{k,t} = sum_a s_a theta_{a,k}`.
///
/// Articles with no dictionary match carry no topic shares and are skipped.
pub fn topic_sentiment(month: &TokenizedMonth, lexicon: &SentimentLexicon, matcher: &TermMatcher) -> Vec<f64> {
    let mut s = vec![0.0; matcher.n_topics()];
    for (_, toks) in month.documents() {
        let Some(theta) = article_attention(toks, matcher) else {
            continue;
        };
        let (p, n) = lexicon.counts(toks);
        let (score, _) = polarity(p, n);
        for (sk, th) in s.iter_mut().zip(&theta) {
            *sk += score * th;
        }
    }
    s
}

/// Topic sentiment for every month, one column per topic.
pub fn topic_sentiment_frame(
    months: &[TokenizedMonth],
    lexicon: &SentimentLexicon,
    matcher: &TermMatcher,
    topics: &[String],
) -> Result<FeatureFrame> {
    let rows: Vec<(Month, Vec<f64>)> = months
        .par_iter()
        .map(|tm| (tm.month, topic_sentiment(tm, lexicon, matcher)))
        .collect();
    FeatureFrame::from_rows(topics.to_vec(), rows)
}

/// `SENT^A_t = sum_k w_{k,t-1} s_{k,t}` using the stale weights in force at
/// each month. Months without stale weights are omitted.
pub fn sentiment_weighted(topic_sent: &FeatureFrame, stale_weights: &BTreeMap<Month, Vec<f64>>) -> Result<SentimentSeries> {
    let mut obs = Vec::new();
    for (m, row) in topic_sent.rows() {
        let Some(w) = stale_weights.get(&m) else {
            continue;
        };
        if w.len() != row.len() {
            return Err(Error::Validation(format!(
                "month {m}: {} weights for {} topics",
                w.len(),
                row.len()
            )));
        }
        obs.push((m, w.iter().zip(row).map(|(a, b)| a * b).sum()));
    }
    Ok(SentimentSeries {
        kind: SentimentKind::TopicWeighted,
        observations: obs,
        flagged: Vec::new(),
    })
}
