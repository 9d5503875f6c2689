//! Text normalization and monthly topic attention.

mod attention;
mod lemma;
mod preprocess;

pub use attention::{
    article_attention, compute_attention, read_attention_csv, read_frame_csv, tokenize_corpus, top_articles, write_attention_csv,
    write_frame_csv,
    TermMatcher, TokenizedMonth,
};
pub use lemma::lemmatize;
pub use preprocess::{default_preprocessor, preprocess, Preprocessor, BOILERPLATE};
