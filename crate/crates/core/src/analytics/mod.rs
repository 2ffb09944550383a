//! Closed-form security arithmetic.
//!
//! Shannon information in its general form and for the binary symmetric
//! channel, the privacy-amplification shrinkage τ₁ as a function of the
//! error rate, the secure-bit rates
//!
//! ```text
//! R_corr = I_AB[e] − τ₁[e]
//! R_del  = I_AB[e] − τ₁[e]·(1 − e) − e
//! ```
//!
//! and the tolerable error rate where `R_del` crosses zero.

mod curve;
mod entropy;
mod rates;

pub use curve::{export_curve, RateCurve, RateRow, Tau1Curve, Tau1Source, Tau1Table};
pub use entropy::{
    binary_entropy, binary_information, entropy, shannon_information, shannon_min_leakage,
    DiscreteChannelModel, DISTRIBUTION_TOLERANCE,
};
pub use rates::{
    bisect, find_tolerable_error, rate_corr, rate_del, sift_factor, tau1_bb84, ROOT_BRACKET,
    ROOT_TOLERANCE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("{what} is not a probability distribution: {detail}")]
    NotADistribution { what: &'static str, detail: String },
    #[error("error rate {e} outside the domain [{lo}, {hi}] of the τ₁ curve")]
    OutOfDomain { e: f64, lo: f64, hi: f64 },
    #[error("no sign change of R_del on [{lo}, {hi}] (values {f_lo}, {f_hi})")]
    NoRoot { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("protocol {protocol} has no built-in τ₁ curve; supply a tabulated one")]
    UnsupportedWithoutTable { protocol: String },
    #[error("malformed τ₁ table: {0}")]
    BadTable(String),
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
}

/// What a finished key is worth: with probability `1 − alpha` Eve holds
/// less than `i_e_tol` bits about it, and with probability `1 − beta` both
/// sides hold the same key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityStatement {
    pub i_e_tol: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SecurityStatement {
    pub fn new(i_e_tol: f64, alpha: f64, beta: f64) -> Result<Self, AnalyticsError> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AnalyticsError::InvalidProbability { name, value });
            }
        }
        Ok(Self { i_e_tol, alpha, beta })
    }
}
