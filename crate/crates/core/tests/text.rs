use textspread_core::syndata::{gen_attention, gen_corpus, SynthConfig};
use textspread_core::text::{compute_attention, default_preprocessor, preprocess, tokenize_corpus, BOILERPLATE};

/// Largest absolute share error and the largest row-sum deviation.
fn round_trip(tokens_per_month: usize) -> (f64, f64) {
    let cfg = SynthConfig {
        seed: 21,
        months: 24,
        tokens_per_month,
        docs_per_month: 10,
        ..Default::default()
    };
    let att = gen_attention(&cfg).unwrap();
    let corpus = gen_corpus(&cfg, &att).unwrap();
    let months = tokenize_corpus(&corpus.documents, default_preprocessor());
    let (got, dropped) = compute_attention(&months, &corpus.dictionary).unwrap();
    assert!(dropped.is_empty());
    assert_eq!(got.months(), att.attention.months());
    let err = got
        .values()
        .iter()
        .zip(att.attention.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (err, got.simplex_deviation().0)
}

#[test]
fn attention_recovers_generating_shares() {
    let mut prev = f64::INFINITY;
    for n in [2_500, 10_000, 40_000] {
        let (err, dev) = round_trip(n);
        assert!(err <= 0.02, "{n} tokens: max error {err}");
        assert!(dev <= 1e-12, "{n} tokens: row sums off by {dev}");
        assert!(err < prev, "{n} tokens: error {err} did not shrink");
        prev = err;
    }
}

#[test]
fn boilerplate_phrases_are_removed() {
    assert_eq!(preprocess("Dow Jones Newswires reported gains"), ["report", "gain"]);
    for phrase in BOILERPLATE {
        let text = format!("Bankers {} warned", phrase.to_uppercase());
        assert_eq!(preprocess(&text), ["banker", "warn"], "{phrase}");
    }
    assert_eq!(preprocess("The Wall Street Journal and the New York Times"), Vec::<String>::new());
    assert_eq!(preprocess("day after day, week after week"), Vec::<String>::new());
}

#[test]
fn markup_numbers_and_addresses_are_dropped() {
    assert_eq!(
        preprocess("Profits &amp; losses rose 12% to $3.5 billion, see www.example.com or desk@example.com"),
        ["profit", "loss", "rise", "billion", "see"]
    );
}
