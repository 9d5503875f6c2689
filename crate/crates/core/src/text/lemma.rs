//! Rule-based English lemmatizer.
//!
//! Inflectional suffixes (plural `-s`, past `-ed`, progressive `-ing`) are
//! stripped with a small set of Porter-style rules, then a handful of spelling
//! fix-ups restore the dictionary form. Irregular forms go through an
//! exception table. The map is applied until it reaches a fixed point, so
//! `lemmatize(lemmatize(w)) == lemmatize(w)` for every input.

const EXCEPTIONS: &[(&str, &str)] = &[
    ("analyses", "analysis"),
    ("bought", "buy"),
    ("children", "child"),
    ("crises", "crisis"),
    ("data", "data"),
    ("fallen", "fall"),
    ("feet", "foot"),
    ("fell", "fall"),
    ("found", "find"),
    ("gave", "give"),
    ("given", "give"),
    ("gone", "go"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("held", "hold"),
    ("kept", "keep"),
    ("led", "lead"),
    ("lost", "lose"),
    ("made", "make"),
    ("men", "man"),
    ("met", "meet"),
    ("news", "news"),
    ("paid", "pay"),
    ("people", "people"),
    ("ran", "run"),
    ("risen", "rise"),
    ("rose", "rise"),
    ("sent", "send"),
    ("series", "series"),
    ("sold", "sell"),
    ("species", "species"),
    ("spent", "spend"),
    ("taken", "take"),
    ("told", "tell"),
    ("took", "take"),
    ("went", "go"),
    ("women", "woman"),
    ("won", "win"),
    ("written", "write"),
    ("wrote", "write"),
];

fn exception(word: &str) -> Option<&'static str> {
    EXCEPTIONS
        .binary_search_by_key(&word, |(k, _)| k)
        .ok()
        .map(|i| EXCEPTIONS[i].1)
}

fn is_vowel(b: &[u8], i: usize) -> bool {
    match b[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel(b, i - 1),
        _ => false,
    }
}

fn has_vowel(s: &str) -> bool {
    let b = s.as_bytes();
    (0..b.len()).any(|i| is_vowel(b, i))
}

/// Porter measure: number of vowel-consonant sequences.
fn measure(s: &str) -> usize {
    let b = s.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let v = is_vowel(b, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// Consonant-vowel-consonant ending, last consonant not w, x or y.
fn ends_cvc(s: &str) -> bool {
    let b = s.as_bytes();
    let n = b.len();
    n >= 3
        && !is_vowel(b, n - 3)
        && is_vowel(b, n - 2)
        && !is_vowel(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

/// Restores a dropped final `e` or undoubles a consonant after `-ed`/`-ing`.
fn fix_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && (stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz")) && !is_vowel(b, n - 3) {
        return format!("{stem}e");
    }
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    if n >= 2 && matches!(b[n - 1], b'c' | b'v' | b'z') {
        return format!("{stem}e");
    }
    if n >= 3 && b[n - 1] == b's' && is_vowel(b, n - 2) && b[n - 2] != b'u' {
        return format!("{stem}e");
    }
    if measure(stem) == 1 && ends_cvc(stem) {
        return format!("{stem}e");
    }
    stem.to_string()
}

fn step(word: &str) -> String {
    if let Some(e) = exception(word) {
        return e.to_string();
    }
    if !word.is_ascii() || word.len() <= 3 {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suf in ["xes", "ches", "shes", "zzes"] {
        if word.ends_with(suf) {
            return word[..word.len() - 2].to_string();
        }
    }
    if let Some(stem) = word.strip_suffix("ied") {
        return format!("{stem}y");
    }
    if let Some(stem) = word.strip_suffix("eed") {
        return if measure(stem) > 0 { format!("{stem}ee") } else { word.to_string() };
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem) {
            return fix_stem(stem);
        }
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return fix_stem(stem);
        }
        return word.to_string();
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// Maps an inflected lowercase word to its lemma.
pub fn lemmatize(word: &str) -> String {
    let mut cur = word.to_string();
    for _ in 0..16 {
        let next = step(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exception_table_sorted() {
        assert!(EXCEPTIONS.windows(2).all(|w| w[0].0 < w[1].0));
        for (_, v) in EXCEPTIONS {
            assert_eq!(lemmatize(v), *v);
        }
    }

    #[test]
    fn common_inflections() {
        let cases = [
            ("gains", "gain"),
            ("reported", "report"),
            ("newswires", "newswire"),
            ("companies", "company"),
            ("classes", "class"),
            ("boxes", "box"),
            ("banks", "bank"),
            ("stopped", "stop"),
            ("related", "relate"),
            ("hoped", "hope"),
            ("increased", "increase"),
            ("produced", "produce"),
            ("rising", "rise"),
            ("falling", "fall"),
            ("agreed", "agree"),
            ("crisis", "crisis"),
            ("focus", "focus"),
            ("business", "business"),
            ("bonds", "bond"),
            ("years", "year"),
            ("times", "time"),
            ("sold", "sell"),
        ];
        for (w, l) in cases {
            assert_eq!(lemmatize(w), l, "{w}");
        }
    }

    #[test]
    fn short_words_untouched() {
        for w in ["is", "gas", "bus", "red", "us"] {
            assert_eq!(lemmatize(w), w);
        }
    }

    #[test]
    fn fixed_point_on_a_word_list() {
        let words = include_str!("../../fixtures/stopwords.txt");
        let extra = "inflation recession markets yields spreads stocks prices rates trading priced \
                     raising closing refinancing crises analyses defaults lending mortgages housing";
        for w in words.lines().chain(extra.split_whitespace()) {
            let l = lemmatize(w);
            assert_eq!(lemmatize(&l), l, "{w}");
        }
    }
}
