//! Statistical machinery: ordinary least squares, the F distribution,
//! Granger causality tests, and IRLS-fitted GLMs with stepwise AIC
//! model selection.

mod fdist;
mod glm;
mod granger;
mod ols;
mod special;
mod stepwise;

pub use fdist::{f_cdf, f_sf};
pub use glm::{aic, glm_fit, glm_predict, log_likelihood, score, Family, GlmFit};
pub use granger::{granger_test, GrangerResult};
pub use ols::{ols_fit, OlsFit};
pub use special::{betainc, ln_gamma};
pub use stepwise::stepwise_aic;
