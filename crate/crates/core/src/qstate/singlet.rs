//! The two-qubit singlet `(|01⟩ − |10⟩)/√2`.
//!
//! The pair is sampled analytically: the first half measured gives a uniform
//! bit and leaves the other half in the state orthogonal to the one found.
//! That reproduces every joint statistic of the singlet, in particular
//! `E(θA, θB) = −cos(θA − θB)` for great-circle directions.
//!
//! A pair is consumed by measurement, so it cannot be measured twice:
//!
//! ```compile_fail
//! use qkdlab::qstate::{measure_pair, BlochDirection, SingletPair};
//! use rand::SeedableRng;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let pair = SingletPair::new();
//! let d = BlochDirection::new(0.0);
//! let _ = measure_pair(pair, d, d, &mut rng);
//! let _ = measure_pair(pair, d, d, &mut rng);
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{measure_along, BlochDirection, QubitState, StateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSide {
    A,
    B,
}

/// An unmeasured singlet pair.
#[derive(Debug)]
pub struct SingletPair {
    _private: (),
}

impl Default for SingletPair {
    fn default() -> Self {
        Self::new()
    }
}

impl SingletPair {
    pub fn new() -> Self {
        Self { _private: () }
    }

    /// Measure one half projectively onto `{outcome0, outcome0⊥}`.
    ///
    /// Returns the outcome (`true` = bit 1) and the collapsed state of the
    /// other half.
    pub fn collapse<R: Rng + ?Sized>(
        self,
        _side: PairSide,
        outcome0: &QubitState,
        rng: &mut R,
    ) -> Result<(bool, QubitState), StateError> {
        outcome0.check()?;
        // The singlet is invariant under U⊗U, so the marginal is uniform for
        // any measurement and the partner is left orthogonal to the result.
        let bit = rng.random::<bool>();
        let found = if bit {
            outcome0.orthogonal()
        } else {
            outcome0.clone()
        };
        Ok((bit, found.orthogonal()))
    }

    /// Measure one half along a great-circle direction.
    pub fn collapse_along<R: Rng + ?Sized>(
        self,
        side: PairSide,
        dir: BlochDirection,
        rng: &mut R,
    ) -> (bool, QubitState) {
        let (bit, partner) = self
            .collapse(side, &dir.state(), rng)
            .expect("great-circle states are normalized");
        // Keep partners exactly on the great circle instead of carrying the
        // phase produced by `orthogonal`.
        let partner_dir = if bit { dir } else { dir.opposite() };
        debug_assert!(partner.same_ray(&partner_dir.state(), 1e-9));
        (bit, partner_dir.state())
    }
}

/// Measure both halves of a singlet along `dir_a` and `dir_b`.
pub fn measure_pair<R: Rng + ?Sized>(
    pair: SingletPair,
    dir_a: BlochDirection,
    dir_b: BlochDirection,
    rng: &mut R,
) -> (bool, bool) {
    let (bit_a, b_half) = pair.collapse_along(PairSide::A, dir_a, rng);
    let bit_b = measure_along(b_half, dir_b, rng).expect("great-circle states are normalized");
    (bit_a, bit_b)
}
