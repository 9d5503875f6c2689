//! Loaders for the corpus, macro series, topic dictionary and metatopic map,
//! plus calendar alignment.

mod corpus;
mod dictionary;
mod macro_series;
mod panel;

pub use corpus::{load_corpus, parse_corpus, write_corpus, DateRange, Document, IngestReport};
pub use dictionary::{MetatopicMap, TopicDictionary};
pub use macro_series::{load_macro, parse_macro, write_series_csv, MacroSeries};
pub use panel::{align, Aggregation, Panel};
