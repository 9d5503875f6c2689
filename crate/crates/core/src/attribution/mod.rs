//! Feature attributions for fitted models and metatopic decompositions of
//! the projected spread.

mod events;
mod metatopic;
mod shap;

pub use events::{event_window_average, Event, EventWindow, OTHER_ROW, RECESSIONS_ROW};
pub use metatopic::{
    explained_variance, metatopic_series, metatopic_weights, rolling_metatopic_weights, MetatopicDecomposition, Partition,
    StaleWeights,
};
pub use shap::{enumerate_shapley, normalized_importance, shap_linear, shap_regression, LinearModel, Link, ShapValues};
