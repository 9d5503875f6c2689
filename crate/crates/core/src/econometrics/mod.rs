//! Growth transforms, least squares and probit with HAC errors, and the
//! forecasting regression battery.

mod battery;
mod hac;
mod ols;
mod probit;
mod transform;

pub use battery::*;
pub use hac::{bartlett_weights, default_lags, long_run_covariance};
pub use ols::{ols_nw, OlsFit};
pub use probit::{inv_mills, log_norm_cdf, norm_cdf, norm_inv_cdf, norm_pdf, probit_nw, ProbitFit};
pub use transform::{lag, nabla, nabla_default, recession_starts, recession_window, RecessionRule};
