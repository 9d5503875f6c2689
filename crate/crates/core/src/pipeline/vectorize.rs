use super::{csv_bytes, Stage};
use crate::error::{Error, Result};
use crate::ingest::{parse_corpus, MetatopicMap, TopicDictionary};
use crate::sentiment::{monthly_sentiment_lm, topic_sentiment_frame, SentimentLexicon};
use crate::series::TimeSeries;
use crate::text::{compute_attention, tokenize_corpus, top_articles, write_attention_csv, write_frame_csv, Preprocessor, TermMatcher};

pub const ATTENTION: &str = "vectorize/attention.csv";
pub const TOPIC_SENTIMENT: &str = "vectorize/topic_sentiment.csv";
pub const COUNTS: &str = "vectorize/counts.csv";
pub const LOG: &str = "vectorize/log.csv";
pub const ARTICLES: &str = "vectorize/articles.csv";
pub const SENT_LM: &str = "SENT-LM";

fn text(bytes: Vec<u8>, what: &str) -> Result<String> {
    String::from_utf8(bytes).map_err(|_| Error::Validation(format!("{what} is not UTF-8")))
}

/// Corpus and dictionary to attention shares, `SENT-LM` and topic sentiment.
pub fn vectorize(s: &Stage) -> Result<()> {
    let cfg = &s.config;
    let inp = cfg.inputs()?;
    let corpus = s.input(&inp.corpus)?;
    let (docs, ingest) = parse_corpus(&corpus[..], &cfg.resolve(&inp.corpus), None)?;
    let dict = TopicDictionary::from_reader(&s.input(&inp.dictionary)?[..])?;
    let pos = text(s.input(&inp.positive)?, "positive lexicon")?;
    let neg = text(s.input(&inp.negative)?, "negative lexicon")?;
    let lexicon = SentimentLexicon::new(pos.lines(), neg.lines())?;
    let pre = match &inp.stopwords {
        Some(p) => Preprocessor::new(text(s.input(p)?, "stopword list")?.lines().map(str::to_string)),
        None => Preprocessor::default(),
    };

    let months = tokenize_corpus(&docs, &pre);
    let (attention, unmatched) = compute_attention(&months, &dict)?;
    s.artifacts.write_with(ATTENTION, |b| write_attention_csv(&attention, b))?;

    let lm = monthly_sentiment_lm(&months, &lexicon);
    let lm_series = TimeSeries::monthly(SENT_LM, lm.observations.clone())?;
    s.write_series(&format!("series/{SENT_LM}.csv"), &lm_series)?;

    let matcher = TermMatcher::new(&dict);
    let topic_sent = topic_sentiment_frame(&months, &lexicon, &matcher, dict.topics())?;
    s.artifacts.write_with(TOPIC_SENTIMENT, |b| write_frame_csv(&topic_sent, "sentiment", b))?;

    let counts = months
        .iter()
        .map(|tm| [tm.month.to_string(), tm.n_documents().to_string(), tm.n_tokens().to_string()]);
    s.artifacts.write_bytes(COUNTS, &csv_bytes(&["date", "documents", "tokens"], counts)?)?;

    let mut log = vec![
        ["documents_loaded".to_string(), ingest.loaded.to_string()],
        ["documents_empty".into(), ingest.dropped_empty.to_string()],
        ["documents_out_of_range".into(), ingest.out_of_range.to_string()],
    ];
    log.extend(ingest.gaps.iter().map(|m| ["gap_month".to_string(), m.to_string()]));
    log.extend(unmatched.iter().map(|m| ["no_dictionary_match".to_string(), m.to_string()]));
    log.extend(lm.flagged.iter().map(|m| ["no_sentiment_word".to_string(), m.to_string()]));
    s.artifacts.write_bytes(LOG, &csv_bytes(&["item", "value"], log)?)?;

    if !cfg.vectorize.articles.is_empty() {
        let groups = match &inp.metatopics {
            Some(p) => MetatopicMap::from_reader(&s.input(p)?[..])?.partition(dict.topics())?,
            None => dict.topics().iter().enumerate().map(|(k, t)| (t.clone(), vec![k])).collect(),
        };
        let n = cfg.vectorize.articles_per_group.unwrap_or(3);
        let mut rows = Vec::new();
        for &m in &cfg.vectorize.articles {
            let Some(tm) = months.iter().find(|tm| tm.month == m) else {
                return Err(Error::Config(format!("no documents in article month {m}")));
            };
            for (group, ranked) in top_articles(tm, &matcher, &groups, None, n) {
                for (rank, (id, score)) in ranked.into_iter().enumerate() {
                    rows.push([m.to_string(), group.clone(), (rank + 1).to_string(), id, score.to_string()]);
                }
            }
        }
        s.artifacts
            .write_bytes(ARTICLES, &csv_bytes(&["date", "metatopic", "rank", "article", "score"], rows)?)?;
    }
    Ok(())
}
