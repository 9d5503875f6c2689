use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Topic names plus a term → weighted topic assignment table.
///
/// Terms are stored lowercase with single spaces between words and are
/// expected to already be in the normalized (lemmatized) token space that
/// [`crate::text::preprocess`] produces. A term with a single entry of weight
/// one is the hard-assignment case.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDictionary {
    topics: Vec<String>,
    terms: BTreeMap<String, Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct RawDictionary {
    topics: Vec<String>,
    terms: BTreeMap<String, Vec<(usize, f64)>>,
}

fn normalize_term(t: &str) -> String {
    t.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl TopicDictionary {
    pub fn new(topics: Vec<String>, terms: impl IntoIterator<Item = (String, Vec<(usize, f64)>)>) -> Result<Self> {
        if topics.is_empty() {
            return Err(Error::Validation("dictionary has no topics".into()));
        }
        let mut seen = HashSet::new();
        for t in &topics {
            if !seen.insert(t.as_str()) {
                return Err(Error::Validation(format!("duplicate topic name {t:?}")));
            }
        }
        let k = topics.len();
        let mut map = BTreeMap::new();
        for (raw, entries) in terms {
            let term = normalize_term(&raw);
            if term.is_empty() {
                return Err(Error::Validation(format!("empty dictionary term {raw:?}")));
            }
            if entries.is_empty() {
                return Err(Error::Validation(format!("term {term:?} maps to no topic")));
            }
            for &(idx, w) in &entries {
                if idx >= k {
                    return Err(Error::Validation(format!(
                        "term {term:?} references topic {idx}, only {k} topics"
                    )));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Validation(format!("term {term:?} has invalid weight {w}")));
                }
            }
            if map.insert(term.clone(), entries).is_some() {
                return Err(Error::Validation(format!("duplicate dictionary term {term:?}")));
            }
        }
        Ok(TopicDictionary { topics, terms: map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let raw: RawDictionary =
            serde_json::from_reader(reader).map_err(|e| Error::Validation(format!("dictionary: {e}")))?;
        Self::new(raw.topics, raw.terms)
    }

    pub fn to_json(&self) -> String {
        let raw = RawDictionary {
            topics: self.topics.clone(),
            terms: self.terms.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("dictionary serializes")
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn terms(&self) -> &BTreeMap<String, Vec<(usize, f64)>> {
        &self.terms
    }

    pub fn topic_index(&self) -> HashMap<&str, usize> {
        self.topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect()
    }
}

/// Total partition of topics into named metatopics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetatopicMap {
    groups: BTreeMap<String, Vec<String>>,
}

impl MetatopicMap {
    pub fn new(groups: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (meta, topics) in &groups {
            for t in topics {
                if let Some(prev) = owner.insert(t.as_str(), meta.as_str()) {
                    return Err(Error::Validation(format!(
                        "topic {t:?} assigned to both {prev:?} and {meta:?}"
                    )));
                }
            }
        }
        Ok(MetatopicMap { groups })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let groups: BTreeMap<String, Vec<String>> =
            serde_json::from_reader(reader).map_err(|e| Error::Validation(format!("metatopic map: {e}")))?;
        Self::new(groups)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.groups).expect("map serializes")
    }

    /// Single metatopic holding every topic.
    pub fn single(name: &str, topics: &[String]) -> Self {
        let mut groups = BTreeMap::new();
        groups.insert(name.to_string(), topics.to_vec());
        MetatopicMap { groups }
    }

    pub fn metatopics(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn members(&self, metatopic: &str) -> Option<&[String]> {
        self.groups.get(metatopic).map(Vec::as_slice)
    }

    /// Resolves the partition against an ordered topic list.
    ///
    /// Returns, for each metatopic (in name order), the column indices of its
    /// topics. Fails if a listed topic is unknown or any topic is unassigned.
    pub fn partition(&self, topics: &[String]) -> Result<Vec<(String, Vec<usize>)>> {
        let index: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut assigned = vec![false; topics.len()];
        let mut out = Vec::with_capacity(self.groups.len());
        for (meta, members) in &self.groups {
            let mut idx = Vec::with_capacity(members.len());
            for t in members {
                let &i = index
                    .get(t.as_str())
                    .ok_or_else(|| Error::Validation(format!("metatopic {meta:?} lists unknown topic {t:?}")))?;
                assigned[i] = true;
                idx.push(i);
            }
            idx.sort_unstable();
            out.push((meta.clone(), idx));
        }
        if let Some(i) = assigned.iter().position(|a| !a) {
            return Err(Error::TopicNotInMap(topics[i].clone()));
        }
        Ok(out)
    }
}
