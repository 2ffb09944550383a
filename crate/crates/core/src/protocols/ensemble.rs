//! Signal sets and receiver measurements of every protocol.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{ProtocolId, SessionConfig, SessionError, Setting};
use crate::channel::Reception;
use crate::qstate::{
    measure, measure_along, measure_onto, Basis, BlochDirection, QubitState, UsdMeasurement,
    UsdOutcome,
};

/// Alice's measurement directions for the entanglement-based scheme.
pub const EKERT_ALICE_DIRECTIONS: [f64; 3] = [0.0, 45.0, 90.0];
/// Bob's set, rotated by 45°.
pub const EKERT_BOB_DIRECTIONS: [f64; 3] = [45.0, 90.0, 135.0];

/// Receiver-side result before sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Bit(bool),
    Inconclusive,
    None,
}

/// Two-time-bin signal of the asymmetric interferometer, over `{|a⟩, |b⟩}`:
///
/// ```text
/// bit 0: −i√R |a⟩ + √T |b⟩
/// bit 1:  √T |a⟩ − i√R |b⟩
/// ```
///
/// with `T = 1 − R`. The two states are orthogonal for every `R`.
pub fn ki_prepare(bit: bool, reflectivity: f64) -> Result<QubitState, SessionError> {
    if !(reflectivity > 0.0 && reflectivity < 1.0) {
        return Err(SessionError::InvalidConfig(format!(
            "reflectivity must lie strictly between 0 and 1, got {reflectivity}"
        )));
    }
    let r = reflectivity.sqrt();
    let t = (1.0 - reflectivity).sqrt();
    let (a, b) = if bit {
        (Complex64::new(t, 0.0), Complex64::new(0.0, -r))
    } else {
        (Complex64::new(0.0, -r), Complex64::new(t, 0.0))
    };
    QubitState::new(a, b).map_err(|e| SessionError::InvalidConfig(e.to_string()))
}

/// Balanced two-time-bin signal `(|a⟩ ± |b⟩)/√2`.
pub fn gv_prepare(bit: bool) -> QubitState {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    QubitState::new_unchecked(s, if bit { -s } else { s })
}

/// Angle between the two B92 states on the great circle for overlap `s`.
pub(crate) fn separation_degrees(overlap: f64) -> f64 {
    2.0 * overlap.acos().to_degrees()
}

/// Everything protocol-specific about preparing and detecting one signal.
#[derive(Debug, Clone)]
pub(crate) struct Ensemble {
    alice_settings: Vec<Setting>,
    bob_settings: Vec<Setting>,
    kind: EnsembleKind,
}

#[derive(Debug, Clone)]
enum EnsembleKind {
    /// Eigenstates of the chosen basis, measured projectively.
    Bases,
    /// One fixed pair of states, read by unambiguous discrimination.
    Pair(UsdMeasurement),
    /// Per-basis non-orthogonal pairs, read by discrimination in the chosen basis.
    BasisPairs { z: UsdMeasurement, x: UsdMeasurement },
    /// Orthogonal time-bin pair, read by the interferometer.
    TimeBin { zero: QubitState, one: QubitState },
    /// Singlet halves, measured along great-circle directions.
    Singlet,
}

impl Ensemble {
    pub(crate) fn new(config: &SessionConfig) -> Result<Self, SessionError> {
        let bases = |bs: &[Basis]| bs.iter().copied().map(Setting::Basis).collect::<Vec<_>>();
        let dirs = |ds: &[f64]| ds.iter().map(|&d| Setting::Direction(d)).collect::<Vec<_>>();
        let usd = |u0: QubitState, u1: QubitState| {
            UsdMeasurement::new(u0, u1).map_err(|e| SessionError::InvalidConfig(e.to_string()))
        };
        let (alice_settings, bob_settings, kind) = match config.protocol {
            ProtocolId::Bb84 => (bases(&[Basis::Z, Basis::X]), bases(&[Basis::Z, Basis::X]), EnsembleKind::Bases),
            ProtocolId::SixState => (bases(&Basis::ALL), bases(&Basis::ALL), EnsembleKind::Bases),
            ProtocolId::B92 => {
                let delta = separation_degrees(config.b92_overlap);
                let pair = usd(
                    BlochDirection::new(0.0).state(),
                    BlochDirection::new(delta).state(),
                )?;
                (vec![Setting::Fixed], vec![Setting::Fixed], EnsembleKind::Pair(pair))
            }
            ProtocolId::FourPlusTwo => {
                let half = separation_degrees(config.b92_overlap) / 2.0;
                // Centres chosen so that overlap 0 reproduces the BB84 states.
                let pair_around = |centre: f64| {
                    usd(
                        BlochDirection::new(centre - half).state(),
                        BlochDirection::new(centre + half).state(),
                    )
                };
                (
                    bases(&[Basis::Z, Basis::X]),
                    bases(&[Basis::Z, Basis::X]),
                    EnsembleKind::BasisPairs {
                        z: pair_around(90.0)?,
                        x: pair_around(180.0)?,
                    },
                )
            }
            ProtocolId::Gv => (
                vec![Setting::Fixed],
                vec![Setting::Fixed],
                EnsembleKind::TimeBin {
                    zero: gv_prepare(false),
                    one: gv_prepare(true),
                },
            ),
            ProtocolId::KoashiImoto => (
                vec![Setting::Fixed],
                vec![Setting::Fixed],
                EnsembleKind::TimeBin {
                    zero: ki_prepare(false, config.ki_reflectivity)?,
                    one: ki_prepare(true, config.ki_reflectivity)?,
                },
            ),
            ProtocolId::Ekert => (
                dirs(&EKERT_ALICE_DIRECTIONS),
                dirs(&EKERT_BOB_DIRECTIONS),
                EnsembleKind::Singlet,
            ),
        };
        Ok(Self {
            alice_settings,
            bob_settings,
            kind,
        })
    }

    pub(crate) fn choose_alice<R: Rng + ?Sized>(&self, rng: &mut R) -> Setting {
        *self.alice_settings.choose(rng).expect("non-empty setting set")
    }

    pub(crate) fn choose_bob<R: Rng + ?Sized>(&self, rng: &mut R) -> Setting {
        *self.bob_settings.choose(rng).expect("non-empty setting set")
    }

    /// The states that leave Alice's side carrying bit 0 and bit 1 under `setting`.
    ///
    /// For the singlet this is the state Bob's half collapses to once Alice
    /// has measured along the setting's direction.
    pub(crate) fn pair(&self, setting: &Setting) -> (QubitState, QubitState) {
        match (&self.kind, setting) {
            (EnsembleKind::Bases, Setting::Basis(b)) => (b.eigenstate(false), b.eigenstate(true)),
            (EnsembleKind::Pair(m), _) => {
                let (u0, u1) = m.states();
                (u0.clone(), u1.clone())
            }
            (EnsembleKind::BasisPairs { z, x }, Setting::Basis(b)) => {
                let m = if *b == Basis::Z { z } else { x };
                let (u0, u1) = m.states();
                (u0.clone(), u1.clone())
            }
            (EnsembleKind::TimeBin { zero, one }, _) => (zero.clone(), one.clone()),
            (EnsembleKind::Singlet, Setting::Direction(d)) => {
                let d = BlochDirection::new(*d);
                (d.opposite().state(), d.state())
            }
            (kind, s) => unreachable!("setting {s:?} does not belong to {kind:?}"),
        }
    }

    /// Bob's measurement of whatever reached his detectors.
    pub(crate) fn detect<R: Rng + ?Sized>(
        &self,
        reception: Reception,
        setting: &Setting,
        rng: &mut R,
    ) -> Detection {
        let signal = match reception {
            Reception::Nothing => return Detection::None,
            Reception::Depolarized | Reception::DarkCount => None,
            Reception::Signal(s) => Some(s),
        };
        let from_usd = |o: UsdOutcome| match o {
            UsdOutcome::Bit0 => Detection::Bit(false),
            UsdOutcome::Bit1 => Detection::Bit(true),
            UsdOutcome::Inconclusive => Detection::Inconclusive,
        };
        let ok = "protocol states are normalized";
        match (&self.kind, setting) {
            (EnsembleKind::Pair(m), _) => from_usd(match signal {
                Some(s) => m.measure(s, rng).expect(ok),
                None => m.measure_mixed(rng),
            }),
            (EnsembleKind::BasisPairs { z, x }, Setting::Basis(b)) => {
                let m = if *b == Basis::Z { z } else { x };
                from_usd(match signal {
                    Some(s) => m.measure(s, rng).expect(ok),
                    None => m.measure_mixed(rng),
                })
            }
            (_, _) if signal.is_none() => Detection::Bit(rng.random()),
            (EnsembleKind::Bases, Setting::Basis(b)) => {
                Detection::Bit(measure(signal.unwrap(), *b, rng).expect(ok))
            }
            (EnsembleKind::TimeBin { zero, .. }, _) => {
                Detection::Bit(measure_onto(signal.unwrap(), zero, rng).expect(ok))
            }
            (EnsembleKind::Singlet, Setting::Direction(d)) => {
                Detection::Bit(measure_along(signal.unwrap(), BlochDirection::new(*d), rng).expect(ok))
            }
            (kind, s) => unreachable!("setting {s:?} does not belong to {kind:?}"),
        }
    }
}
