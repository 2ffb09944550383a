use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ensemble::{Detection, Ensemble};
use super::record::{Announcement, BobOutcome, ChannelEvent, SignalRow};
use super::sift::is_kept;
use super::{ProtocolId, SessionConfig, SessionError, SessionRecord, Setting};
use crate::channel::{
    eve_guess, intercept_resend, pns_split, transmit, AttackKind, AttackModel, ChannelParams,
    EveAction, EveGuess, Reception,
};
use crate::qstate::{BlochDirection, PairSide, QubitState, SignalPulse, SingletPair};

/// Time bins reserved per time-bin signal: up to two bins of send jitter plus
/// the delayed arm.
const SLOT_BINS: u64 = 4;

/// Run one key exchange. Every random choice is drawn from a single stream
/// seeded by `config.seed`, so equal inputs give equal transcripts.
pub fn run_session(
    config: &SessionConfig,
    channel: &ChannelParams,
    adversary: &AttackModel,
) -> Result<SessionRecord, SessionError> {
    config.validate()?;
    channel.validate()?;
    config.check_adversary(adversary)?;

    let ensemble = Ensemble::new(config)?;
    let protocol = config.protocol;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut record = SessionRecord::new(config.clone(), *channel, adversary.clone());
    let mut stored: Vec<Option<QubitState>> = vec![None; config.n_signals];

    for index in 0..config.n_signals {
        let alice_setting = ensemble.choose_alice(&mut rng);
        let photons = config.source.sample(&mut rng)?;
        let time_bin = if protocol.is_time_bin() {
            let jitter = if config.random_send_times {
                rng.random_range(0..SLOT_BINS - 1)
            } else {
                0
            };
            index as u64 * SLOT_BINS + jitter
        } else {
            index as u64
        };

        let (alice_bit, state) = if protocol == ProtocolId::Ekert {
            let Setting::Direction(d) = alice_setting else {
                unreachable!("singlet settings are directions")
            };
            SingletPair::new().collapse_along(PairSide::A, BlochDirection::new(d), &mut rng)
        } else {
            let bit: bool = rng.random();
            let (s0, s1) = ensemble.pair(&alice_setting);
            (bit, if bit { s1 } else { s0 })
        };

        let pulse = SignalPulse {
            state,
            photon_count: photons,
            time_bin,
        };
        let (pulse, eve) = match adversary.kind {
            AttackKind::None => (pulse, EveAction::Untouched),
            AttackKind::InterceptResend => intercept_resend(pulse, adversary, &mut rng),
            AttackKind::PnsSplit => {
                let out = pns_split(pulse, adversary, &mut rng);
                stored[index] = out.stored;
                (out.forwarded, out.action)
            }
        };

        let bob_setting = ensemble.choose_bob(&mut rng);
        let (event, detection) = if eve == EveAction::Blocked && protocol.has_reference_pulse() {
            // The reference pulse arrives alone and Bob's detector fires at random.
            (ChannelEvent::Suppressed, Detection::Bit(rng.random()))
        } else {
            let reception = transmit(pulse, channel, &mut rng);
            let event = match &reception {
                Reception::Signal(_) => ChannelEvent::Clean,
                Reception::Depolarized => ChannelEvent::Depolarized,
                Reception::DarkCount => ChannelEvent::DarkCount,
                Reception::Nothing => ChannelEvent::Lost,
            };
            (event, ensemble.detect(reception, &bob_setting, &mut rng))
        };
        let bob_outcome = match detection {
            Detection::Bit(b) => BobOutcome::Bit(b),
            Detection::Inconclusive => BobOutcome::Inconclusive,
            Detection::None => BobOutcome::NoDetection,
        };

        record.push_row(SignalRow {
            index,
            alice_bit: alice_bit as u8,
            alice_setting,
            photons,
            time_bin,
            readout_bin: protocol.is_time_bin().then_some(time_bin + 1),
            eve,
            channel: event,
            bob_setting,
            bob_outcome,
        });
    }

    announce(&mut record, protocol);
    guess(&mut record, &ensemble, adversary, &stored, &mut rng);
    Ok(record)
}

/// Public discussion: which settings are disclosed depends on the protocol.
fn announce(record: &mut SessionRecord, protocol: ProtocolId) {
    let discloses_settings = !matches!(
        protocol,
        ProtocolId::B92 | ProtocolId::Gv | ProtocolId::KoashiImoto
    );
    let events: Vec<Announcement> = record
        .rows()
        .iter()
        .filter(|r| r.bob_outcome.clicked())
        .map(|r| Announcement {
            index: r.index,
            alice_setting: discloses_settings.then_some(r.alice_setting),
            bob_setting: discloses_settings.then_some(r.bob_setting),
            conclusive: r.bob_outcome.bit().is_some(),
            kept: is_kept(protocol, r),
        })
        .collect();
    for a in events {
        record.push_announcement(a);
    }
}

/// Eve reads her stored results against the announcements, for sifted
/// positions she touched.
fn guess<R: Rng + ?Sized>(
    record: &mut SessionRecord,
    ensemble: &Ensemble,
    adversary: &AttackModel,
    stored: &[Option<QubitState>],
    rng: &mut R,
) {
    let protocol = record.config().protocol;
    let mut guesses = Vec::new();
    for row in record.rows() {
        if !row.eve.is_attack() || !is_kept(protocol, row) {
            continue;
        }
        let (s0, s1) = ensemble.pair(&row.alice_setting);
        if let Some((bit, conclusive)) = eve_guess(
            &row.eve,
            stored[row.index].as_ref(),
            (&s0, &s1),
            adversary.delayed_readout,
            rng,
        ) {
            guesses.push(EveGuess {
                index: row.index,
                guess: bit as u8,
                conclusive,
            });
        }
    }
    for g in guesses {
        record.push_guess(g);
    }
}
