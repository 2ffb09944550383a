//! Classical post-processing: error estimation, reconciliation, privacy
//! amplification and authentication.
//!
//! Every bit that crosses the public channel is counted once in a
//! [`LeakageReport`]: estimation samples, block parities and verification
//! hashes each have their own counter.

mod auth;
mod cascade;
mod estimate;
mod pipeline;
mod privacy;

pub use auth::{authenticate, forging_bound, verify, AuthReservoir, AuthTag, DEFAULT_TAG_WIDTH};
pub use cascade::{error_correct, CascadeParams, LeakageReport, ReconciledKey};
pub use estimate::{estimate_qber, QberEstimate, MIN_SAMPLE};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome, PipelineStatus};
pub use privacy::{
    eve_info_bound, final_length, privacy_amplify, privacy_amplify_deducting, tau1_from_pcoll,
    FinalKey,
};

pub use crate::analytics::shannon_min_leakage;

use thiserror::Error;

use crate::analytics::AnalyticsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocError {
    #[error("keys have different lengths: {alice} and {bob}")]
    LengthMismatch { alice: usize, bob: usize },
    #[error("estimation needs at least {needed} {what}, got {got}")]
    Estimation { what: &'static str, needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("verification hash differs after reconciliation; keys discarded")]
    ReconciliationFailed,
    #[error("no key left: n_fin = {n_fin}")]
    KeyExhausted { n_fin: i64 },
    #[error("collision probability {p_coll} outside [2^-{n_rec}, 1]")]
    CollisionOutOfRange { p_coll: f64, n_rec: usize },
    #[error("authentication key reservoir exhausted: need {needed} bits, {available} left")]
    AuthUnavailable { needed: usize, available: usize },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}
