use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::lemma::lemmatize;

const STOPWORDS: &str = include_str!("../../fixtures/stopwords.txt");

/// Publication boilerplate removed after lemmatization.
pub const BOILERPLATE: &[&str] = &[
    "wall street journal",
    "new york times",
    "new york",
    "dow jones newswires",
    "year year",
    "month month",
    "week week",
    "day day",
];

/// Text normalizer: cleanup, tokenization, stopword removal, lemmatization
/// and boilerplate filtering.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
    /// Lemmatized boilerplate n-grams, longest first.
    boilerplate: Vec<Vec<String>>,
    url: Regex,
    email: Regex,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::new(STOPWORDS.lines().map(str::to_string))
    }
}

impl Preprocessor {
    pub fn new(stopwords: impl IntoIterator<Item = String>) -> Self {
        let stopwords: HashSet<String> = stopwords
            .into_iter()
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        let mut boilerplate: Vec<Vec<String>> = BOILERPLATE
            .iter()
            .map(|p| p.split_whitespace().map(lemmatize).collect())
            .collect();
        boilerplate.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Preprocessor {
            stopwords,
            boilerplate,
            url: Regex::new(r"(?i)\b(?:https?://|ftp://|www\.)\S+").expect("url regex"),
            email: Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+").expect("email regex"),
        }
    }

    /// Reads a stopword file, one token per line.
    pub fn from_stopword_file(path: impl AsRef<std::path::Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::new(text.lines().map(str::to_string)))
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    fn keep(&self, token: &str) -> bool {
        token.chars().count() >= 2 && !self.stopwords.contains(token)
    }

    pub fn preprocess(&self, raw: &str) -> Vec<String> {
        let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        let unescaped = html_escape::decode_html_entities(&collapsed);
        let no_email = self.email.replace_all(&unescaped, " ");
        let no_url = self.url.replace_all(&no_email, " ");
        let cleaned: String = no_url
            .chars()
            .map(|c| if c.is_numeric() || matches!(c, '$' | '.' | '/' | '%') { ' ' } else { c })
            .collect();
        let lowered = cleaned.to_lowercase();
        let tokens = lowered
            .split(|c: char| !c.is_alphabetic())
            .filter(|t| self.keep(t))
            .map(lemmatize)
            .filter(|t| self.keep(t))
            .collect();
        self.strip_boilerplate(tokens)
    }

    /// Removes boilerplate n-grams, longest match first, until none remain.
    fn strip_boilerplate(&self, mut tokens: Vec<String>) -> Vec<String> {
        loop {
            let mut out = Vec::with_capacity(tokens.len());
            let mut i = 0;
            let mut removed = false;
            'scan: while i < tokens.len() {
                for phrase in &self.boilerplate {
                    let n = phrase.len();
                    if i + n <= tokens.len() && tokens[i..i + n] == phrase[..] {
                        i += n;
                        removed = true;
                        continue 'scan;
                    }
                }
                out.push(std::mem::take(&mut tokens[i]));
                i += 1;
            }
            if !removed {
                return out;
            }
            tokens = out;
        }
    }
}

/// Shared preprocessor with the bundled stopword list.
pub fn default_preprocessor() -> &'static Preprocessor {
    static P: OnceLock<Preprocessor> = OnceLock::new();
    P.get_or_init(Preprocessor::default)
}

/// Normalizes raw text into tokens with the bundled stopword list.
pub fn preprocess(raw: &str) -> Vec<String> {
    default_preprocessor().preprocess(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn url_removed() {
        assert_eq!(preprocess("Visit https://x.y now!"), ["visit"]);
    }

    #[test]
    fn empty_input() {
        assert!(preprocess("").is_empty());
        assert!(preprocess("   \n\t ").is_empty());
    }

    #[test]
    fn newswire_boilerplate() {
        assert_eq!(preprocess("Dow Jones Newswires reported gains"), ["report", "gain"]);
    }

    #[test]
    fn all_boilerplate_phrases_removed() {
        let text = "The Wall Street Journal and the New York Times, in New York; \
                    year-over-year, month to month, week by week, day after day.";
        let toks = preprocess(text);
        for bad in ["wall", "journal", "york"] {
            assert!(!toks.iter().any(|t| t == bad), "{bad} in {toks:?}");
        }
        assert!(!toks.windows(2).any(|w| w[0] == w[1]), "{toks:?}");
        assert_eq!(preprocess("years years of growth"), ["growth"]);
    }

    #[test]
    fn removal_exposes_new_boilerplate() {
        assert!(preprocess("year new york year").is_empty());
    }

    #[test]
    fn html_email_digits_symbols() {
        let toks = preprocess("Profits &amp; losses rose 5.2% to $300/share; mail ceo@firm.com");
        assert_eq!(toks, ["profit", "loss", "rise", "share", "mail"]);
    }

    #[test]
    fn no_stopwords_digits_or_punctuation_survive() {
        let p = default_preprocessor();
        let toks = preprocess("It was the best of times, it was 1929: banks failed!! 100% (really).");
        for t in &toks {
            assert!(!p.is_stopword(t));
            assert!(t.chars().all(char::is_alphabetic), "{t}");
        }
    }

    proptest! {
        #[test]
        fn idempotent(s in "[ -~]{0,200}") {
            let once = preprocess(&s);
            prop_assert_eq!(preprocess(&once.join(" ")), once);
        }

        #[test]
        fn idempotent_on_words(words in proptest::collection::vec("(new|york|year|day|times|wall|street|journal|dow|jones|newswires|banks|rising|crisis|stated|hoped)", 0..30)) {
            let once = preprocess(&words.join(" "));
            prop_assert_eq!(preprocess(&once.join(" ")), once);
        }
    }
}
