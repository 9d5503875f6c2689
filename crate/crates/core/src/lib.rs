pub mod attribution;
pub mod calendar;
pub mod econometrics;
pub mod error;
pub mod ingest;
pub mod lasso;
pub mod pipeline;
pub mod projector;
pub mod sentiment;
pub mod series;
pub mod syndata;
pub mod text;

pub use calendar::{Frequency, Month, Window};
pub use error::{Error, ErrorKind, Result};
pub use series::{AttentionMatrix, FeatureFrame, TimeSeries, TransformKind};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/attention.md")]
    mod attention {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/forecasting.md")]
    mod forecasting {}
    #[doc = include_str!("../../../book/src/attribution.md")]
    mod attribution {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
