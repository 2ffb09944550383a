//! Quantum channel and adversary models.
//!
//! [`transmit`] applies per-photon loss, depolarization of a surviving
//! signal and detector dark counts. The adversary lives in [`attack`]:
//! intercept-resend with optional delayed readout, and photon-number
//! splitting on multi-photon pulses. [`pns_insecurity_check`] is the
//! counting condition for weak-pulse sources.

mod attack;

pub use attack::{
    eve_guess, intercept_resend, pns_split, AttackKind, AttackModel, EveAction, EveGuess,
    EveTranscript, PnsOutcome,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{QubitState, SignalPulse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("intercept-resend needs at least one basis for the eavesdropper")]
    NoEveBases,
    #[error("photon-number splitting requires delayed readout of the stored photon")]
    PnsWithoutDelayedReadout,
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ChannelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ChannelError::InvalidProbability { name, value })
    }
}

/// Order in which loss and depolarization act on a pulse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseOrder {
    #[default]
    LossFirst,
    DepolarizeFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Probability a surviving signal is replaced by a maximally mixed state.
    /// Matched-basis error rate is half of this.
    pub depolarize_prob: f64,
    /// Per-photon probability of not reaching Bob.
    pub loss_prob: f64,
    /// Probability that a detection window with no photon clicks anyway.
    pub dark_count_prob: f64,
    #[serde(default)]
    pub noise_order: NoiseOrder,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelParams {
    pub fn ideal() -> Self {
        Self {
            depolarize_prob: 0.0,
            loss_prob: 0.0,
            dark_count_prob: 0.0,
            noise_order: NoiseOrder::LossFirst,
        }
    }

    /// Noise-only channel calibrated to a matched-basis error rate `qber`.
    pub fn with_qber(qber: f64) -> Self {
        Self {
            depolarize_prob: 2.0 * qber,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        check_probability("depolarize_prob", self.depolarize_prob)?;
        check_probability("loss_prob", self.loss_prob)?;
        check_probability("dark_count_prob", self.dark_count_prob)
    }
}

/// What reaches Bob's detectors in one time bin.
#[derive(Debug, Clone)]
pub enum Reception {
    /// The signal arrived intact.
    Signal(QubitState),
    /// The signal arrived but was depolarized.
    Depolarized,
    /// No photon arrived, but the detector fired.
    DarkCount,
    /// Nothing registered.
    Nothing,
}

impl Reception {
    pub fn clicked(&self) -> bool {
        !matches!(self, Reception::Nothing)
    }

    /// Dark counts and depolarized signals both act as a maximally mixed input.
    pub fn is_mixed(&self) -> bool {
        matches!(self, Reception::Depolarized | Reception::DarkCount)
    }
}

/// Send `pulse` through the channel.
pub fn transmit<R: Rng + ?Sized>(pulse: SignalPulse, params: &ChannelParams, rng: &mut R) -> Reception {
    let n = pulse.photon_count;
    let (survives, depolarized) = match params.noise_order {
        NoiseOrder::LossFirst => {
            let survives = any_photon_survives(n, params.loss_prob, rng);
            let depolarized = survives && rng.random_bool(params.depolarize_prob);
            (survives, depolarized)
        }
        NoiseOrder::DepolarizeFirst => {
            let depolarized = n > 0 && rng.random_bool(params.depolarize_prob);
            let survives = any_photon_survives(n, params.loss_prob, rng);
            (survives, depolarized)
        }
    };
    if survives {
        if depolarized {
            Reception::Depolarized
        } else {
            Reception::Signal(pulse.state)
        }
    } else if rng.random_bool(params.dark_count_prob) {
        Reception::DarkCount
    } else {
        Reception::Nothing
    }
}

fn any_photon_survives<R: Rng + ?Sized>(photons: u32, loss_prob: f64, rng: &mut R) -> bool {
    (0..photons).fold(false, |any, _| rng.random_bool(1.0 - loss_prob) || any)
}

/// Verdict of the multi-photon counting condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecurityFlag {
    /// Every received signal could stem from a split multi-photon pulse.
    Insecure,
    /// The counting condition does not rule the run out. It is necessary,
    /// not sufficient, for security.
    NotDecided,
}

/// A run is totally insecure when Bob received fewer signals than the
/// source emitted multi-photon pulses.
pub fn pns_insecurity_check(n_multiphoton_sent: u64, n_received: u64) -> SecurityFlag {
    if n_received < n_multiphoton_sent {
        SecurityFlag::Insecure
    } else {
        SecurityFlag::NotDecided
    }
}
