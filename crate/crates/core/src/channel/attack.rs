use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_probability, ChannelError};
use crate::qstate::{measure, measure_onto, Basis, QubitState, SignalPulse, UsdMeasurement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    None,
    InterceptResend,
    PnsSplit,
}

/// Eavesdropper configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackModel {
    pub kind: AttackKind,
    /// Share of pulses Eve touches.
    pub fraction: f64,
    /// Bases Eve picks from, uniformly, for intercept-resend.
    pub eve_bases: Vec<Basis>,
    /// Eve keeps her results and reads them against the public announcements.
    pub delayed_readout: bool,
}

impl AttackModel {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            fraction: 0.0,
            eve_bases: Vec::new(),
            delayed_readout: false,
        }
    }

    pub fn intercept_resend(fraction: f64, eve_bases: Vec<Basis>, delayed_readout: bool) -> Self {
        Self {
            kind: AttackKind::InterceptResend,
            fraction,
            eve_bases,
            delayed_readout,
        }
    }

    pub fn pns_split(fraction: f64) -> Self {
        Self {
            kind: AttackKind::PnsSplit,
            fraction,
            eve_bases: Vec::new(),
            delayed_readout: true,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        check_probability("fraction", self.fraction)?;
        match self.kind {
            AttackKind::InterceptResend if self.eve_bases.is_empty() => Err(ChannelError::NoEveBases),
            AttackKind::PnsSplit if !self.delayed_readout => Err(ChannelError::PnsWithoutDelayedReadout),
            _ => Ok(()),
        }
    }
}

/// What Eve did to one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum EveAction {
    Untouched,
    /// Measured in `basis`, found `outcome`, resent that eigenstate.
    InterceptResend { basis: Basis, outcome: u8 },
    /// Kept one photon of a multi-photon pulse and forwarded the rest.
    SplitPhoton,
    /// Suppressed a single-photon pulse.
    Blocked,
}

impl EveAction {
    pub fn is_attack(&self) -> bool {
        !matches!(self, EveAction::Untouched)
    }
}

/// Eve's bit guess for one sifted position, after the public discussion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveGuess {
    pub index: usize,
    pub guess: u8,
    /// Eve's posterior on this guess is 1.
    pub conclusive: bool,
}

/// Eve's side of a session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EveTranscript {
    pub actions: Vec<(usize, EveAction)>,
    pub guesses: Vec<EveGuess>,
}

/// With probability `fraction`, measure the pulse in a random basis from
/// `eve_bases` and forward the eigenstate found. Vacuum passes untouched.
pub fn intercept_resend<R: Rng + ?Sized>(
    pulse: SignalPulse,
    model: &AttackModel,
    rng: &mut R,
) -> (SignalPulse, EveAction) {
    if pulse.is_vacuum() || !rng.random_bool(model.fraction) {
        return (pulse, EveAction::Untouched);
    }
    let basis = *model
        .eve_bases
        .choose(rng)
        .expect("validated model has at least one basis");
    let outcome = measure(pulse.state, basis, rng).expect("pulse states are normalized");
    let forwarded = SignalPulse {
        state: basis.eigenstate(outcome),
        photon_count: pulse.photon_count,
        time_bin: pulse.time_bin,
    };
    (
        forwarded,
        EveAction::InterceptResend {
            basis,
            outcome: outcome as u8,
        },
    )
}

#[derive(Debug, Clone)]
pub struct PnsOutcome {
    pub forwarded: SignalPulse,
    pub action: EveAction,
    /// The photon Eve holds until the announcements.
    pub stored: Option<QubitState>,
}

/// With probability `fraction`, split one photon off a multi-photon pulse,
/// or block a single-photon pulse.
pub fn pns_split<R: Rng + ?Sized>(pulse: SignalPulse, model: &AttackModel, rng: &mut R) -> PnsOutcome {
    if pulse.is_vacuum() || !rng.random_bool(model.fraction) {
        return PnsOutcome {
            forwarded: pulse,
            action: EveAction::Untouched,
            stored: None,
        };
    }
    let stored = pulse.state.clone();
    if pulse.is_multi_photon() {
        PnsOutcome {
            forwarded: SignalPulse {
                photon_count: pulse.photon_count - 1,
                ..pulse
            },
            action: EveAction::SplitPhoton,
            stored: Some(stored),
        }
    } else {
        PnsOutcome {
            forwarded: SignalPulse {
                photon_count: 0,
                ..pulse
            },
            action: EveAction::Blocked,
            stored: None,
        }
    }
}

/// Eve's guess of Alice's bit once Alice's signal pair is public.
///
/// `ensemble` holds the states that carried bit 0 and bit 1 given the
/// announced setting. With `delayed` readout an intercept-resend result is
/// turned into the maximum-posterior bit; otherwise Eve keeps her raw
/// outcome. A stored photon is read with the optimal measurement for the
/// ensemble: projective when the two states are orthogonal, unambiguous
/// discrimination otherwise.
pub fn eve_guess<R: Rng + ?Sized>(
    action: &EveAction,
    stored: Option<&QubitState>,
    ensemble: (&QubitState, &QubitState),
    delayed: bool,
    rng: &mut R,
) -> Option<(bool, bool)> {
    match *action {
        EveAction::InterceptResend { basis, outcome } => {
            let outcome = outcome != 0;
            if !delayed {
                return Some((outcome, false));
            }
            let found = basis.eigenstate(outcome);
            let l0 = ensemble.0.probability_of(&found);
            let l1 = ensemble.1.probability_of(&found);
            let post0 = l0 / (l0 + l1);
            Some(if post0 > 1.0 - 1e-12 {
                (false, true)
            } else if post0 < 1e-12 {
                (true, true)
            } else if (post0 - 0.5).abs() < 1e-12 {
                (outcome, false)
            } else {
                (post0 < 0.5, false)
            })
        }
        EveAction::SplitPhoton => {
            let photon = stored?.clone();
            if ensemble.0.overlap(ensemble.1) < 1e-12 {
                let bit = measure_onto(photon, ensemble.0, rng).ok()?;
                Some((bit, true))
            } else {
                let usd = UsdMeasurement::new(ensemble.0.clone(), ensemble.1.clone()).ok()?;
                match usd.measure(photon, rng).ok()?.bit() {
                    Some(bit) => Some((bit, true)),
                    None => Some((rng.random(), false)),
                }
            }
        }
        EveAction::Untouched | EveAction::Blocked => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pulse(state: QubitState, photons: u32) -> SignalPulse {
        SignalPulse {
            state,
            photon_count: photons,
            time_bin: 3,
        }
    }

    #[test]
    fn zero_fraction_is_identity() {
        let model = AttackModel::intercept_resend(0.0, vec![Basis::Z, Basis::X], true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let s = Basis::X.eigenstate(true);
            let (out, action) = intercept_resend(pulse(s.clone(), 1), &model, &mut rng);
            assert_eq!(action, EveAction::Untouched);
            assert_eq!(out.state, s);
        }
    }

    #[test]
    fn resend_forwards_the_eigenstate_found() {
        let model = AttackModel::intercept_resend(1.0, vec![Basis::X], false);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (out, action) = intercept_resend(pulse(QubitState::zero(), 1), &model, &mut rng);
            let EveAction::InterceptResend { basis, outcome } = action else {
                panic!("expected an interception");
            };
            assert_eq!(basis, Basis::X);
            assert_eq!(out.state, Basis::X.eigenstate(outcome != 0));
            assert_eq!(out.time_bin, 3);
        }
    }

    #[test]
    fn delayed_guess_is_certain_only_in_matching_basis() {
        let z = (Basis::Z.eigenstate(false), Basis::Z.eigenstate(true));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let matched = EveAction::InterceptResend {
            basis: Basis::Z,
            outcome: 1,
        };
        assert_eq!(eve_guess(&matched, None, (&z.0, &z.1), true, &mut rng), Some((true, true)));
        let crossed = EveAction::InterceptResend {
            basis: Basis::X,
            outcome: 1,
        };
        assert_eq!(eve_guess(&crossed, None, (&z.0, &z.1), true, &mut rng), Some((true, false)));
    }

    #[test]
    fn pns_splits_multi_and_blocks_single() {
        let model = AttackModel::pns_split(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = pns_split(pulse(QubitState::one(), 3), &model, &mut rng);
        assert_eq!(out.action, EveAction::SplitPhoton);
        assert_eq!(out.forwarded.photon_count, 2);
        assert!(out.stored.is_some());
        let out = pns_split(pulse(QubitState::one(), 1), &model, &mut rng);
        assert_eq!(out.action, EveAction::Blocked);
        assert_eq!(out.forwarded.photon_count, 0);
        let out = pns_split(pulse(QubitState::one(), 0), &model, &mut rng);
        assert_eq!(out.action, EveAction::Untouched);
    }

    #[test]
    fn stored_photon_reveals_orthogonal_encoding() {
        let x = (Basis::X.eigenstate(false), Basis::X.eigenstate(true));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for bit in [false, true] {
            let stored = Basis::X.eigenstate(bit);
            for _ in 0..100 {
                let g = eve_guess(&EveAction::SplitPhoton, Some(&stored), (&x.0, &x.1), true, &mut rng);
                assert_eq!(g, Some((bit, true)));
            }
        }
    }

    #[test]
    fn model_validation() {
        assert_eq!(
            AttackModel::intercept_resend(1.0, vec![], true).validate(),
            Err(ChannelError::NoEveBases)
        );
        let mut pns = AttackModel::pns_split(0.5);
        pns.delayed_readout = false;
        assert_eq!(pns.validate(), Err(ChannelError::PnsWithoutDelayedReadout));
        assert!(AttackModel::intercept_resend(1.2, vec![Basis::Z], true).validate().is_err());
    }
}
