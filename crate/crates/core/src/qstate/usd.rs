//! Unambiguous discrimination of two non-orthogonal pure states.
//!
//! The three-outcome measurement uses the optimal (equal-prior) elements
//!
//! ```text
//! E0 = |u1⊥⟩⟨u1⊥| / (1 + s)
//! E1 = |u0⊥⟩⟨u0⊥| / (1 + s)
//! E? = I − E0 − E1
//! ```
//!
//! with `s = |⟨u0|u1⟩|`. `E0` annihilates `u1`, so a conclusive "0" is never
//! produced by an undisturbed `u1` (and vice versa). The conclusive
//! probability on either undisturbed input is `1 − s`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{QubitState, StateError};

/// Outcome of an unambiguous discrimination attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UsdOutcome {
    Bit0,
    Bit1,
    Inconclusive,
}

impl UsdOutcome {
    pub fn bit(self) -> Option<bool> {
        match self {
            UsdOutcome::Bit0 => Some(false),
            UsdOutcome::Bit1 => Some(true),
            UsdOutcome::Inconclusive => None,
        }
    }
}

/// A configured discrimination measurement for the pair `(u0, u1)`.
#[derive(Debug, Clone)]
pub struct UsdMeasurement {
    u0: QubitState,
    u1: QubitState,
    not_u1: QubitState,
    not_u0: QubitState,
    overlap: f64,
}

impl UsdMeasurement {
    pub fn new(u0: QubitState, u1: QubitState) -> Result<Self, StateError> {
        u0.check()?;
        u1.check()?;
        let overlap = u0.overlap(&u1);
        if overlap >= 1.0 - 1e-12 {
            return Err(StateError::IdenticalStates { overlap });
        }
        Ok(Self {
            not_u1: u1.orthogonal(),
            not_u0: u0.orthogonal(),
            u0,
            u1,
            overlap,
        })
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn states(&self) -> (&QubitState, &QubitState) {
        (&self.u0, &self.u1)
    }

    /// `(P(Bit0), P(Bit1), P(Inconclusive))` for a pure input.
    pub fn probabilities(&self, input: &QubitState) -> (f64, f64, f64) {
        let w = 1.0 / (1.0 + self.overlap);
        let p0 = w * input.probability_of(&self.not_u1);
        let p1 = w * input.probability_of(&self.not_u0);
        (p0, p1, (1.0 - p0 - p1).max(0.0))
    }

    /// Outcome probabilities for the maximally mixed input (a depolarized
    /// signal or a dark count).
    pub fn mixed_probabilities(&self) -> (f64, f64, f64) {
        let p = 0.5 / (1.0 + self.overlap);
        (p, p, 1.0 - 2.0 * p)
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        input: QubitState,
        rng: &mut R,
    ) -> Result<UsdOutcome, StateError> {
        input.check()?;
        let probs = self.probabilities(&input);
        Ok(sample_outcome(probs, rng))
    }

    pub fn measure_mixed<R: Rng + ?Sized>(&self, rng: &mut R) -> UsdOutcome {
        sample_outcome(self.mixed_probabilities(), rng)
    }
}

fn sample_outcome<R: Rng + ?Sized>((p0, p1, _): (f64, f64, f64), rng: &mut R) -> UsdOutcome {
    let r: f64 = rng.random();
    if r < p0 {
        UsdOutcome::Bit0
    } else if r < p0 + p1 {
        UsdOutcome::Bit1
    } else {
        UsdOutcome::Inconclusive
    }
}

/// One-shot B92 discrimination of `state` against the signal pair `(u0, u1)`.
pub fn b92_discriminate<R: Rng + ?Sized>(
    state: QubitState,
    u0: &QubitState,
    u1: &QubitState,
    rng: &mut R,
) -> Result<UsdOutcome, StateError> {
    UsdMeasurement::new(u0.clone(), u1.clone())?.measure(state, rng)
}
