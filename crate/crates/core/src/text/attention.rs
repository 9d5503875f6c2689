use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::preprocess::Preprocessor;
use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::ingest::{Document, TopicDictionary};
use crate::series::{AttentionMatrix, FeatureFrame};

/// Pooled preprocessed tokens of one month, with article boundaries kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedMonth {
    pub month: Month,
    pub tokens: Vec<String>,
    doc_ids: Vec<String>,
    /// `doc_bounds[d]..doc_bounds[d + 1]` are the tokens of document `d`.
    doc_bounds: Vec<usize>,
}

impl TokenizedMonth {
    pub fn new(month: Month) -> Self {
        TokenizedMonth {
            month,
            tokens: Vec::new(),
            doc_ids: Vec::new(),
            doc_bounds: vec![0],
        }
    }

    pub fn push_document(&mut self, id: impl Into<String>, tokens: impl IntoIterator<Item = String>) {
        self.doc_ids.push(id.into());
        self.tokens.extend(tokens);
        self.doc_bounds.push(self.tokens.len());
    }

    /// Total token count $N_t$.
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_documents(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn documents(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.doc_ids
            .iter()
            .enumerate()
            .map(move |(d, id)| (id.as_str(), &self.tokens[self.doc_bounds[d]..self.doc_bounds[d + 1]]))
    }
}

/// Preprocesses every document and pools the results by month.
///
/// Documents are processed in parallel; output order follows the input
/// (which `load_corpus` sorts by date and id).
pub fn tokenize_corpus(docs: &[Document], pre: &Preprocessor) -> Vec<TokenizedMonth> {
    let tokenized: Vec<Vec<String>> = docs
        .par_iter()
        .map(|d| {
            let mut toks = pre.preprocess(&d.title);
            toks.extend(pre.preprocess(&d.body));
            toks
        })
        .collect();
    let mut months: Vec<TokenizedMonth> = Vec::new();
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| docs[a].date.cmp(&docs[b].date).then_with(|| docs[a].id.cmp(&docs[b].id)));
    for i in order {
        let m = docs[i].month();
        if months.last().map(|tm| tm.month) != Some(m) {
            months.push(TokenizedMonth::new(m));
        }
        months
            .last_mut()
            .expect("just pushed")
            .push_document(docs[i].id.clone(), tokenized[i].iter().cloned());
    }
    months
}

/// Longest-match dictionary lookup over token sequences.
#[derive(Debug, Clone)]
pub struct TermMatcher {
    index: HashMap<String, usize>,
    /// Topic entries per term, in sorted-term order.
    entries: Vec<Vec<(usize, f64)>>,
    max_len: usize,
    k: usize,
}

impl TermMatcher {
    pub fn new(dict: &TopicDictionary) -> Self {
        let mut index = HashMap::new();
        let mut entries = Vec::new();
        let mut max_len = 1;
        for (i, (term, e)) in dict.terms().iter().enumerate() {
            max_len = max_len.max(term.split(' ').count());
            index.insert(term.clone(), i);
            entries.push(e.clone());
        }
        TermMatcher {
            index,
            entries,
            max_len,
            k: dict.n_topics(),
        }
    }

    pub fn n_topics(&self) -> usize {
        self.k
    }

    /// Adds term match counts for `tokens` into `counts` (indexed by term).
    ///
    /// At each position the longest dictionary n-gram wins; matched tokens are
    /// consumed.
    pub fn count_into(&self, tokens: &[String], counts: &mut [u64]) {
        let mut key = String::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut matched = 0;
            for n in (1..=self.max_len.min(tokens.len() - i)).rev() {
                key.clear();
                for (j, t) in tokens[i..i + n].iter().enumerate() {
                    if j > 0 {
                        key.push(' ');
                    }
                    key.push_str(t);
                }
                if let Some(&idx) = self.index.get(key.as_str()) {
                    counts[idx] += 1;
                    matched = n;
                    break;
                }
            }
            i += matched.max(1);
        }
    }

    pub fn counts(&self, tokens: &[String]) -> Vec<u64> {
        let mut c = vec![0; self.entries.len()];
        self.count_into(tokens, &mut c);
        c
    }

    /// Normalized topic shares from term counts, or `None` if nothing matched.
    pub fn shares(&self, counts: &[u64]) -> Option<Vec<f64>> {
        let mut mass = vec![0.0; self.k];
        for (term, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &(k, w) in &self.entries[term] {
                mass[k] += c as f64 * w;
            }
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return None;
        }
        for v in &mut mass {
            *v /= total;
        }
        Some(mass)
    }
}

/// Monthly attention shares. Months without any matched token are dropped and
/// returned separately.
pub fn compute_attention(months: &[TokenizedMonth], dict: &TopicDictionary) -> Result<(AttentionMatrix, Vec<Month>)> {
    let matcher = TermMatcher::new(dict);
    let rows: Vec<(Month, Option<Vec<f64>>)> = months
        .par_iter()
        .map(|tm| {
            let mut counts = vec![0; matcher.entries.len()];
            for (_, toks) in tm.documents() {
                matcher.count_into(toks, &mut counts);
            }
            (tm.month, matcher.shares(&counts))
        })
        .collect();
    let mut kept = Vec::with_capacity(rows.len());
    let mut dropped = Vec::new();
    for (m, row) in rows {
        match row {
            Some(r) => kept.push((m, r)),
            None => {
                log::warn!("month {m}: no dictionary matches, dropped");
                dropped.push(m);
            }
        }
    }
    let att = AttentionMatrix::from_rows(dict.topics().to_vec(), kept)?;
    Ok((att, dropped))
}

/// Topic shares of a single preprocessed article.
pub fn article_attention(tokens: &[String], matcher: &TermMatcher) -> Option<Vec<f64>> {
    matcher.shares(&matcher.counts(tokens))
}

/// Articles of a month ranked by their contribution to each metatopic.
///
/// The score of article `a` for metatopic `M` is
/// `sum_{k in M} weight_k * theta_{a,k}`, with unit weights when `weights` is
/// `None`. Ties break by article id.
pub fn top_articles(
    month: &TokenizedMonth,
    matcher: &TermMatcher,
    groups: &[(String, Vec<usize>)],
    weights: Option<&[f64]>,
    n: usize,
) -> Vec<(String, Vec<(String, f64)>)> {
    let shares: Vec<(&str, Vec<f64>)> = month
        .documents()
        .filter_map(|(id, toks)| article_attention(toks, matcher).map(|s| (id, s)))
        .collect();
    groups
        .iter()
        .map(|(name, idx)| {
            let mut scored: Vec<(String, f64)> = shares
                .iter()
                .map(|(id, s)| {
                    let score = idx.iter().map(|&k| weights.map_or(1.0, |w| w[k]) * s[k]).sum();
                    (id.to_string(), score)
                })
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scored.truncate(n);
            (name.clone(), scored)
        })
        .collect()
}

/// Long-format dump: `month,topic,share`.
pub fn write_attention_csv(att: &AttentionMatrix, out: impl Write) -> Result<()> {
    write_frame_csv(att, "share", out)
}

/// Long-format dump `month,topic,<value>` of any per-topic frame.
pub fn write_frame_csv(att: &FeatureFrame, value: &str, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Validation(e.to_string());
    w.write_record(["month", "topic", value]).map_err(err)?;
    for (m, row) in att.rows() {
        let ms = m.to_string();
        for (name, v) in att.names().iter().zip(row) {
            w.write_record([ms.as_str(), name.as_str(), &v.to_string()]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<attention>", e))?;
    Ok(())
}

/// Reads the long-format dump back. Topic order is the order of first
/// appearance; every month must list every topic.
pub fn read_attention_csv(input: impl Read) -> Result<AttentionMatrix> {
    read_frame_csv(input, "share")
}

pub fn read_frame_csv(input: impl Read, value: &str) -> Result<FeatureFrame> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| Error::Validation(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["month", "topic", value] {
        return Err(Error::Validation(format!("expected header month,topic,{value}")));
    }
    let mut names: Vec<String> = Vec::new();
    let mut name_idx: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(Month, Vec<Option<f64>>)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Validation(format!("attention line {line}: {e}")))?;
        let m: Month = rec[0].parse()?;
        let topic = &rec[1];
        let v: f64 = rec[2].parse().map_err(|_| Error::NonNumeric {
            series: "attention".into(),
            line,
            value: rec[2].to_string(),
        })?;
        let j = match name_idx.get(topic) {
            Some(&j) => j,
            None => {
                if rows.len() > 1 {
                    return Err(Error::Validation(format!("attention line {line}: new topic {topic:?} after first month")));
                }
                names.push(topic.to_string());
                name_idx.insert(topic.to_string(), names.len() - 1);
                names.len() - 1
            }
        };
        if rows.last().map(|r| r.0) != Some(m) {
            rows.push((m, Vec::new()));
        }
        let row = &mut rows.last_mut().expect("pushed").1;
        if row.len() <= j {
            row.resize(j + 1, None);
        }
        if row[j].replace(v).is_some() {
            return Err(Error::Validation(format!("attention line {line}: duplicate cell")));
        }
    }
    let k = names.len();
    let rows = rows
        .into_iter()
        .map(|(m, r)| {
            if r.len() != k || r.iter().any(Option::is_none) {
                return Err(Error::Validation(format!("attention month {m} is incomplete")));
            }
            Ok((m, r.into_iter().map(|v| v.expect("checked")).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    AttentionMatrix::from_rows(names, rows)
}
