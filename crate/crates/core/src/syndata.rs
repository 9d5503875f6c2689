//! Seeded synthetic attention, corpora and macro series with planted
//! structure.

use std::collections::{BTreeMap, HashSet};

use chrono::Duration;
use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{Frequency, Month};
use crate::error::{Error, Result};
use crate::ingest::{Document, MetatopicMap, TopicDictionary};
use crate::series::{AttentionMatrix, TimeSeries, TransformKind};
use crate::text::default_preprocessor;

/// Coefficients tying the latent spread to macro outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroLink {
    /// Monthly log payroll growth per standardized spread unit.
    pub emp: f64,
    /// Monthly unemployment change per unit.
    pub uer: f64,
    /// Monthly log output growth per unit.
    pub gdp: f64,
    /// Recession propensity per unit.
    pub recession: f64,
}

impl Default for MacroLink {
    fn default() -> Self {
        MacroLink {
            emp: -0.001,
            uer: 0.03,
            gdp: -0.0015,
            recession: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// First month with a target value.
    pub start: Month,
    pub months: usize,
    /// Attention-only months before `start`.
    pub history_months: usize,
    pub topics: usize,
    pub sparsity: usize,
    pub snr: f64,
    /// AR(1) coefficient of topic logits.
    pub rho: f64,
    /// Stationary standard deviation of logit deviations.
    pub logit_sd: f64,
    pub intercept: f64,
    /// Planted weights flip sign from this month on.
    pub break_at: Option<Month>,
    pub terms_per_topic: usize,
    pub tokens_per_month: usize,
    pub docs_per_month: usize,
    /// Share of tokens drawn from non-dictionary filler words.
    pub filler_share: f64,
    /// Share of tokens drawn from the sentiment lexicon.
    pub sentiment_share: f64,
    pub metatopics: usize,
    pub link: MacroLink,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            start: Month::new(1973, 1),
            months: 300,
            history_months: 0,
            topics: 180,
            sparsity: 10,
            snr: 5.0,
            rho: 0.8,
            logit_sd: 0.6,
            intercept: 0.0,
            break_at: None,
            terms_per_topic: 5,
            tokens_per_month: 10_000,
            docs_per_month: 25,
            filler_share: 0.2,
            sentiment_share: 0.03,
            metatopics: 6,
            link: MacroLink::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(format!("synthetic config: {m}")));
        if self.topics == 0 || self.months == 0 {
            return bad("need at least one topic and one month");
        }
        if self.sparsity > self.topics {
            return bad("sparsity exceeds the number of topics");
        }
        if self.snr.is_nan() || self.snr <= 0.0 {
            return bad("snr must be positive");
        }
        if !(self.rho.abs() < 1.0) {
            return bad("rho must lie in (-1, 1)");
        }
        if self.filler_share < 0.0 || self.sentiment_share < 0.0 || self.filler_share + self.sentiment_share >= 1.0 {
            return bad("filler and sentiment shares must be nonnegative and sum below 1");
        }
        if self.docs_per_month == 0 || self.terms_per_topic == 0 || self.metatopics == 0 {
            return bad("docs, terms per topic and metatopics must be positive");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn first_month(&self) -> Month {
        self.start.offset(-(self.history_months as i32))
    }

    pub fn all_months(&self) -> Vec<Month> {
        (0..self.history_months + self.months).map(|i| self.first_month().offset(i as i32)).collect()
    }

    pub fn topic_names(&self) -> Vec<String> {
        (1..=self.topics).map(|k| format!("T{k:03}")).collect()
    }
}

const STREAM_PARAMS: u64 = 1;
const STREAM_WORDS: u64 = 2;
const STREAM_MACRO: u64 = 3;
const STREAM_MONTHS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthAttention {
    /// Shares for history and target months.
    pub attention: AttentionMatrix,
    /// Planted weights on the share scale, before any break.
    pub weights: Vec<f64>,
    pub planted: Vec<usize>,
    pub intercept: f64,
    /// `intercept + w'theta` at every month.
    pub signal: TimeSeries,
    /// Signal plus noise at every month.
    pub latent: TimeSeries,
    /// Latent series over the target months.
    pub target: TimeSeries,
    pub noise_sd: f64,
}

impl SynthAttention {
    /// Weights in force at `m`.
    pub fn weights_at(&self, m: Month, cfg: &SynthConfig) -> Vec<f64> {
        match cfg.break_at {
            Some(b) if m >= b => self.weights.iter().map(|w| -w).collect(),
            _ => self.weights.clone(),
        }
    }

    pub fn target_signal(&self) -> TimeSeries {
        let obs = self.signal.observations().iter().copied().filter(|(m, _)| self.target.get(*m).is_some()).collect();
        TimeSeries::monthly(format!("{}_signal", self.target.name), obs).expect("sorted")
    }
}

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Simplex rows from softmax of AR(1) logits, and a target loading on a
/// sparse set of planted topics.
///
/// Planted magnitudes are drawn in standardized units, `U(0.5, 1.5)` with a
/// random sign, and divided by each topic's share standard deviation. The
/// noise variance is the signal variance over `snr`.
pub fn gen_attention(cfg: &SynthConfig) -> Result<SynthAttention> {
    cfg.validate()?;
    let mut rng = cfg.rng(STREAM_PARAMS);
    let k = cfg.topics;
    let months = cfg.all_months();
    let t_all = months.len();
    let mu: Vec<f64> = (0..k).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let innov = cfg.logit_sd * (1.0 - cfg.rho * cfg.rho).sqrt();
    let mut u: Vec<f64> = (0..k).map(|_| cfg.logit_sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut rows = Vec::with_capacity(t_all);
    for (i, &m) in months.iter().enumerate() {
        if i > 0 {
            for uk in u.iter_mut() {
                *uk = cfg.rho * *uk + innov * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let z: Vec<f64> = mu.iter().zip(&u).map(|(a, b)| a + b).collect();
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        let total: f64 = e.iter().sum();
        rows.push((m, e.iter().map(|v| v / total).collect::<Vec<f64>>()));
    }
    let attention = AttentionMatrix::from_rows(cfg.topic_names(), rows)?;

    let mut planted = index::sample(&mut rng, k, cfg.sparsity).into_vec();
    planted.sort_unstable();
    let target_rows: Vec<usize> = (cfg.history_months..t_all).collect();
    let mut weights = vec![0.0; k];
    let mag = Uniform::new_inclusive(0.5, 1.5);
    for &j in &planted {
        let col: Vec<f64> = target_rows.iter().map(|&i| attention.row(i)[j]).collect();
        let s = sd(&col);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let w = sign * mag.sample(&mut rng);
        weights[j] = if s > 0.0 { w / s } else { w };
    }
    let flipped: Vec<f64> = weights.iter().map(|w| -w).collect();
    let signal_vals: Vec<f64> = months
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let w = match cfg.break_at {
                Some(b) if m >= b => &flipped,
                _ => &weights,
            };
            cfg.intercept + w.iter().zip(attention.row(i)).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let target_signal: Vec<f64> = target_rows.iter().map(|&i| signal_vals[i]).collect();
    let var = sd(&target_signal).powi(2);
    let noise_sd = if cfg.snr.is_infinite() { 0.0 } else { (var / cfg.snr).sqrt() };
    let latent_vals: Vec<f64> = signal_vals
        .iter()
        .map(|s| s + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let signal = TimeSeries::monthly("EBP_signal", months.iter().copied().zip(signal_vals).collect())?;
    let latent = TimeSeries::monthly("EBP_latent", months.iter().copied().zip(latent_vals.iter().copied()).collect())?;
    let target = TimeSeries::monthly(
        "EBP",
        target_rows.iter().map(|&i| (months[i], latent_vals[i])).collect(),
    )?;
    Ok(SynthAttention {
        attention,
        weights,
        planted,
        intercept: cfg.intercept,
        signal,
        latent,
        target,
        noise_sd,
    })
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct consonant-vowel pseudo-words that survive preprocessing unchanged.
fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, syllables: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let pre = default_preprocessor();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut w = String::with_capacity(2 * syllables);
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        }
        if taken.contains(&w) || pre.is_stopword(&w) || pre.preprocess(&w) != [w.as_str()] {
            continue;
        }
        taken.insert(w.clone());
        out.push(w);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    pub dictionary: TopicDictionary,
    /// Term list per topic.
    pub vocabulary: Vec<Vec<String>>,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

/// Documents whose dictionary-term draws follow the attention rows.
///
/// Each month holds `tokens_per_month` tokens: topic terms drawn from the
/// month's shares, sentiment words whose tone leans against the latent
/// spread, and filler. Tokens are shuffled and split into documents.
pub fn gen_corpus(cfg: &SynthConfig, att: &SynthAttention) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = cfg.rng(STREAM_WORDS);
    let mut taken = HashSet::new();
    let vocabulary: Vec<Vec<String>> = (0..cfg.topics)
        .map(|_| pseudo_words(&mut rng, cfg.terms_per_topic, 3, &mut taken))
        .collect();
    let positive = pseudo_words(&mut rng, 20, 3, &mut taken);
    let negative = pseudo_words(&mut rng, 20, 3, &mut taken);
    let filler = pseudo_words(&mut rng, 200, 2, &mut taken);
    let dictionary = TopicDictionary::new(
        cfg.topic_names(),
        vocabulary
            .iter()
            .enumerate()
            .flat_map(|(k, terms)| terms.iter().map(move |t| (t.clone(), vec![(k, 1.0)]))),
    )?;

    let latent: Vec<f64> = att.latent.observations().iter().map(|o| o.1).collect();
    let lmean = latent.iter().sum::<f64>() / latent.len() as f64;
    let lsd = sd(&latent).max(f64::MIN_POSITIVE);
    let n_sent = (cfg.tokens_per_month as f64 * cfg.sentiment_share).round() as usize;
    let n_fill = (cfg.tokens_per_month as f64 * cfg.filler_share).round() as usize;
    let n_topic = cfg.tokens_per_month.saturating_sub(n_sent + n_fill);

    let docs: Vec<Vec<Document>> = att
        .attention
        .rows()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, (m, theta))| {
            let mut rng = cfg.rng(STREAM_MONTHS + i as u64);
            let mut tokens: Vec<&str> = Vec::with_capacity(cfg.tokens_per_month);
            if n_topic > 0 {
                let topic = WeightedIndex::new(theta).map_err(|e| Error::Validation(format!("month {m}: {e}")))?;
                for _ in 0..n_topic {
                    let terms = &vocabulary[topic.sample(&mut rng)];
                    tokens.push(&terms[rng.gen_range(0..terms.len())]);
                }
            }
            let z = (latent[i] - lmean) / lsd;
            let p_pos = 0.5 - 0.35 * z.tanh();
            for _ in 0..n_sent {
                let pool = if rng.gen_bool(p_pos) { &positive } else { &negative };
                tokens.push(&pool[rng.gen_range(0..pool.len())]);
            }
            for _ in 0..n_fill {
                tokens.push(&filler[rng.gen_range(0..filler.len())]);
            }
            tokens.shuffle(&mut rng);
            let n_docs = cfg.docs_per_month;
            let mut out = Vec::with_capacity(n_docs);
            for d in 0..n_docs {
                let lo = d * tokens.len() / n_docs;
                let hi = (d + 1) * tokens.len() / n_docs;
                let mut body = String::new();
                if d == 0 {
                    body.push_str("Dow Jones Newswires -- ");
                }
                for (j, t) in tokens[lo..hi].iter().enumerate() {
                    if j > 0 {
                        body.push_str(if j % 17 == 0 { " the " } else { " " });
                    }
                    body.push_str(t);
                }
                let title = format!(
                    "{} {}",
                    filler[rng.gen_range(0..filler.len())],
                    filler[rng.gen_range(0..filler.len())]
                );
                out.push(Document {
                    id: format!("syn-{:04}{:02}-{d:03}", m.year(), m.month()),
                    date: m.first_day() + Duration::days((d % 28) as i64),
                    title,
                    body,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut documents: Vec<Document> = docs.into_iter().flatten().collect();
    documents.sort_by(|a, b| (a.date, &a.id).cmp(&(b.date, &b.id)));
    Ok(SynthCorpus {
        documents,
        dictionary,
        vocabulary,
        positive,
        negative,
    })
}

/// Contiguous blocks of topics named `M01`, `M02`, ...
pub fn gen_metatopics(cfg: &SynthConfig) -> Result<MetatopicMap> {
    let names = cfg.topic_names();
    let g = cfg.metatopics.min(cfg.topics);
    let mut groups = BTreeMap::new();
    for j in 0..g {
        let lo = j * names.len() / g;
        let hi = (j + 1) * names.len() / g;
        groups.insert(format!("M{:02}", j + 1), names[lo..hi].to_vec());
    }
    MetatopicMap::new(groups)
}

struct Ar1 {
    mean: f64,
    rho: f64,
    sd: f64,
    state: f64,
}

impl Ar1 {
    fn new(mean: f64, rho: f64, sd: f64) -> Self {
        Ar1 { mean, rho, sd, state: 0.0 }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.state = self.rho * self.state + self.sd * rng.sample::<f64, _>(StandardNormal);
        self.mean + self.state
    }
}

/// Macro series over every synthetic month, linked to the latent spread
/// through `cfg.link`: `GZF`, `TS`, `RFF`, `BAA`, `TBILL` (levels), `EMP`
/// (log levels), `UER` (rate), `NBER` (0/1) and quarterly `GDP`.
pub fn gen_macro(cfg: &SynthConfig, att: &SynthAttention) -> Result<Vec<TimeSeries>> {
    let mut rng = cfg.rng(STREAM_MACRO);
    let months = cfg.all_months();
    let latent: Vec<f64> = att.latent.observations().iter().map(|o| o.1).collect();
    let lmean = latent.iter().sum::<f64>() / latent.len() as f64;
    let lsd = sd(&latent).max(f64::MIN_POSITIVE);
    let s: Vec<f64> = latent.iter().map(|v| (v - lmean) / lsd).collect();
    let lagged = |i: usize| if i == 0 { 0.0 } else { s[i - 1] };

    let mut gzf = Ar1::new(1.5, 0.9, 0.1);
    let mut ts = Ar1::new(1.5, 0.95, 0.2);
    let mut rff = Ar1::new(1.0, 0.97, 0.25);
    let mut baa = Ar1::new(6.0, 0.97, 0.2);
    let mut tbill = Ar1::new(4.0, 0.98, 0.2);
    let mut series: BTreeMap<&str, Vec<(Month, f64)>> = BTreeMap::new();
    let mut log_emp: f64 = 0.0;
    let mut uer: f64 = 5.0;
    let mut in_recession = false;
    let mut gdp_growth = Vec::with_capacity(months.len());
    for (i, &m) in months.iter().enumerate() {
        let sl = lagged(i);
        series.entry("GZF").or_default().push((m, gzf.next(&mut rng)));
        series.entry("TS").or_default().push((m, ts.next(&mut rng)));
        series.entry("RFF").or_default().push((m, rff.next(&mut rng)));
        series.entry("BAA").or_default().push((m, baa.next(&mut rng) + 0.4 * s[i]));
        series.entry("TBILL").or_default().push((m, tbill.next(&mut rng)));
        log_emp += 0.0015 + cfg.link.emp * sl + 0.001 * rng.sample::<f64, _>(StandardNormal);
        series.entry("EMP").or_default().push((m, 100.0 * log_emp.exp()));
        uer += cfg.link.uer * sl - 0.02 * (uer - 5.0) + 0.05 * rng.sample::<f64, _>(StandardNormal);
        series.entry("UER").or_default().push((m, uer.max(0.5)));
        let window = (i.saturating_sub(3)..i).map(|j| s[j]).sum::<f64>() / 3.0;
        let r = cfg.link.recession * window + rng.sample::<f64, _>(StandardNormal);
        in_recession = if in_recession { r > 0.3 } else { r > 1.4 };
        series.entry("NBER").or_default().push((m, if in_recession { 1.0 } else { 0.0 }));
        gdp_growth.push(0.002 + cfg.link.gdp * sl + 0.002 * rng.sample::<f64, _>(StandardNormal));
    }
    let mut out = Vec::new();
    for (name, obs) in series {
        let transform = match name {
            "EMP" => TransformKind::LogDifference,
            "UER" => TransformKind::ArithmeticDifference,
            _ => TransformKind::Level,
        };
        out.push(TimeSeries::new(name, Frequency::Monthly, transform, obs)?);
    }
    let mut gdp = Vec::new();
    let mut level: f64 = 0.0;
    let mut i = months.iter().position(|m| m.is_quarter_start()).unwrap_or(months.len());
    while i + 3 <= months.len() {
        level += gdp_growth[i..i + 3].iter().sum::<f64>();
        gdp.push((months[i], 1000.0 * level.exp()));
        i += 3;
    }
    out.push(TimeSeries::new("GDP", Frequency::Quarterly, TransformKind::LogDifference, gdp)?);
    out.push(att.target.clone());
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Everything the pipeline consumes, generated from one config.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub attention: SynthAttention,
    pub corpus: SynthCorpus,
    pub metatopics: MetatopicMap,
    pub macro_series: Vec<TimeSeries>,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthBundle> {
    let attention = gen_attention(cfg)?;
    let corpus = gen_corpus(cfg, &attention)?;
    let metatopics = gen_metatopics(cfg)?;
    let macro_series = gen_macro(cfg, &attention)?;
    Ok(SynthBundle {
        attention,
        corpus,
        metatopics,
        macro_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            months: 36,
            topics: 8,
            sparsity: 3,
            tokens_per_month: 2000,
            docs_per_month: 4,
            metatopics: 3,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn rows_on_simplex_and_seeded() {
        let cfg = small();
        let a = gen_attention(&cfg).unwrap();
        let (max_dev, _) = a.attention.simplex_deviation();
        assert!(max_dev <= 1e-12);
        assert_eq!(a.planted.len(), 3);
        assert_eq!(gen_attention(&cfg).unwrap(), a);
        let other = gen_attention(&SynthConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(other.attention, a.attention);
    }

    #[test]
    fn noise_matches_snr() {
        let cfg = SynthConfig { months: 400, ..small() };
        let a = gen_attention(&cfg).unwrap();
        let sig: Vec<f64> = a.target_signal().observations().iter().map(|o| o.1).collect();
        assert!((a.noise_sd.powi(2) - sd(&sig).powi(2) / 5.0).abs() < 1e-12);
        let inf = gen_attention(&SynthConfig { snr: f64::INFINITY, ..cfg }).unwrap();
        assert_eq!(inf.noise_sd, 0.0);
        assert_eq!(inf.target.observations(), inf.target_signal().observations());
    }

    #[test]
    fn vocabulary_survives_preprocessing() {
        let cfg = small();
        let c = gen_corpus(&cfg, &gen_attention(&cfg).unwrap()).unwrap();
        for terms in &c.vocabulary {
            for t in terms {
                assert_eq!(crate::text::preprocess(t), [t.as_str()]);
            }
        }
        assert_eq!(c.documents.len(), 36 * 4);
        assert!(c.documents.windows(2).all(|w| (w[0].date, &w[0].id) < (w[1].date, &w[1].id)));
    }

    #[test]
    fn invalid_configs() {
        assert!(SynthConfig { sparsity: 9, ..small() }.validate().is_err());
        assert!(SynthConfig { snr: 0.0, ..small() }.validate().is_err());
        assert!(SynthConfig { rho: 1.0, ..small() }.validate().is_err());
    }

    #[test]
    fn macro_series_cover_every_month() {
        let cfg = SynthConfig { history_months: 24, ..small() };
        let a = gen_attention(&cfg).unwrap();
        let ms = gen_macro(&cfg, &a).unwrap();
        let names: Vec<&str> = ms.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["BAA", "EBP", "EMP", "GDP", "GZF", "NBER", "RFF", "TBILL", "TS", "UER"]);
        for s in &ms {
            match s.name.as_str() {
                "EBP" => assert_eq!(s.len(), 36),
                "GDP" => assert_eq!(s.len(), 20),
                _ => assert_eq!(s.len(), 60),
            }
        }
        let maps = gen_metatopics(&cfg).unwrap();
        assert_eq!(maps.partition(&cfg.topic_names()).unwrap().len(), 3);
    }
}
