//! Exact single-qubit states and measurements.
//!
//! A [`QubitState`] is a normalized pair of complex amplitudes over the
//! computational basis. Protocol figures place their signal states on one
//! great circle of the Bloch sphere; [`BlochDirection`] addresses points on
//! that circle by angle, with `0°` at `|0⟩` (+z), `90°` at `(|0⟩+|1⟩)/√2`
//! (+x) and `180°` at `|1⟩`. Directions half a turn apart are orthogonal
//! states. The y axis lies off that circle and is reached through
//! [`Basis::Y`].
//!
//! Bit value 0 is always the "+" eigenstate of a basis.

mod singlet;
mod source;
mod usd;

pub use singlet::{measure_pair, PairSide, SingletPair};
pub use source::{sample_photon_number, SignalPulse, SourceModel};
pub use usd::{b92_discriminate, UsdMeasurement, UsdOutcome};

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalization slack for constructed states.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state is not normalized: |amp0|^2 + |amp1|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("state has zero norm and cannot be normalized")]
    ZeroVector,
    #[error("discrimination states are identical (overlap {overlap}); no conclusive outcome exists")]
    IdenticalStates { overlap: f64 },
    #[error("mean photon number must be a finite non-negative number, got {0}")]
    InvalidMeanPhotonNumber(f64),
}

/// A pure qubit state `amp0·|0⟩ + amp1·|1⟩`.
#[derive(Clone, PartialEq)]
pub struct QubitState {
    amp0: Complex64,
    amp1: Complex64,
}

impl QubitState {
    /// Build a state from amplitudes, rejecting anything off the unit sphere.
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self, StateError> {
        let state = Self { amp0, amp1 };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE || !norm_sqr.is_finite() {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Scale arbitrary non-zero amplitudes onto the unit sphere.
    pub fn normalized(amp0: Complex64, amp1: Complex64) -> Result<Self, StateError> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::ZeroVector);
        }
        Ok(Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    /// Wrap amplitudes without validation. Measurements re-check
    /// normalization and fail on a bad state.
    pub fn new_unchecked(amp0: Complex64, amp1: Complex64) -> Self {
        Self { amp0, amp1 }
    }

    pub fn zero() -> Self {
        Self {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn one() -> Self {
        Self {
            amp0: Complex64::new(0.0, 0.0),
            amp1: Complex64::new(1.0, 0.0),
        }
    }

    /// The state at `dir` on the protocol great circle: `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    pub fn from_direction(dir: BlochDirection) -> Self {
        let half = dir.degrees().to_radians() / 2.0;
        Self {
            amp0: Complex64::new(half.cos(), 0.0),
            amp1: Complex64::new(half.sin(), 0.0),
        }
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &QubitState) -> f64 {
        self.inner(other).norm()
    }

    /// Born probability `|⟨target|self⟩|²` of finding `self` in `target`.
    pub fn probability_of(&self, target: &QubitState) -> f64 {
        target.inner(self).norm_sqr()
    }

    /// The state orthogonal to `self` (unique up to phase).
    pub fn orthogonal(&self) -> Self {
        Self {
            amp0: -self.amp1.conj(),
            amp1: self.amp0.conj(),
        }
    }

    /// True if `self` and `other` differ only by a global phase.
    pub fn same_ray(&self, other: &QubitState, tol: f64) -> bool {
        (self.overlap(other) - 1.0).abs() <= tol
    }

    fn check(&self) -> Result<(), StateError> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(StateError::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }
}

impl fmt::Debug for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.6}{:+.6}i)|0⟩ + ({:.6}{:+.6}i)|1⟩",
            self.amp0.re, self.amp0.im, self.amp1.re, self.amp1.im
        )
    }
}

/// Measurement / preparation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    /// Eigenstate encoding `bit` (false = 0 = "+" direction).
    pub fn eigenstate(self, bit: bool) -> QubitState {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match (self, bit) {
            (Basis::Z, false) => QubitState::zero(),
            (Basis::Z, true) => QubitState::one(),
            (Basis::X, false) => QubitState::new_unchecked(s, s),
            (Basis::X, true) => QubitState::new_unchecked(s, -s),
            (Basis::Y, false) => QubitState::new_unchecked(s, Complex64::new(0.0, FRAC_1_SQRT_2)),
            (Basis::Y, true) => QubitState::new_unchecked(s, Complex64::new(0.0, -FRAC_1_SQRT_2)),
        }
    }

    /// Position of the "+" eigenstate on the protocol great circle, if it lies on it.
    pub fn direction(self) -> Option<BlochDirection> {
        match self {
            Basis::Z => Some(BlochDirection::new(0.0)),
            Basis::X => Some(BlochDirection::new(90.0)),
            Basis::Y => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
            Basis::Y => "Y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z" => Some(Basis::Z),
            "X" => Some(Basis::X),
            "Y" => Some(Basis::Y),
            _ => None,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A point on the protocol great circle, stored in degrees within `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlochDirection {
    degrees: f64,
}

impl BlochDirection {
    pub fn new(degrees: f64) -> Self {
        Self {
            degrees: degrees.rem_euclid(360.0),
        }
    }

    pub fn degrees(self) -> f64 {
        self.degrees
    }

    /// The antipodal direction, i.e. the orthogonal state.
    pub fn opposite(self) -> Self {
        Self::new(self.degrees + 180.0)
    }

    pub fn state(self) -> QubitState {
        QubitState::from_direction(self)
    }

    /// Same point on the circle, up to `1e-9` degrees.
    pub fn same_as(self, other: BlochDirection) -> bool {
        let d = (self.degrees - other.degrees).rem_euclid(360.0);
        d < 1e-9 || 360.0 - d < 1e-9
    }
}

impl fmt::Display for BlochDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees)
    }
}

/// Eigenstate of `basis` encoding `bit`.
pub fn prepare(basis: Basis, bit: bool) -> QubitState {
    basis.eigenstate(bit)
}

/// Projective measurement in `basis`. Returns `true` for bit 1.
pub fn measure<R: Rng + ?Sized>(
    state: QubitState,
    basis: Basis,
    rng: &mut R,
) -> Result<bool, StateError> {
    measure_onto(state, &basis.eigenstate(false), rng)
}

/// Projective measurement along a great-circle direction: outcome 0 is the
/// state at `dir`, outcome 1 the antipodal state.
pub fn measure_along<R: Rng + ?Sized>(
    state: QubitState,
    dir: BlochDirection,
    rng: &mut R,
) -> Result<bool, StateError> {
    measure_onto(state, &dir.state(), rng)
}

/// Projective measurement in the orthonormal basis `{outcome0, outcome0⊥}`.
pub fn measure_onto<R: Rng + ?Sized>(
    state: QubitState,
    outcome0: &QubitState,
    rng: &mut R,
) -> Result<bool, StateError> {
    state.check()?;
    outcome0.check()?;
    let p0 = state.probability_of(outcome0);
    Ok(rng.random::<f64>() >= p0)
}
