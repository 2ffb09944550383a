use serde::{Deserialize, Serialize};

use super::{ProtocolId, SessionRecord, Setting, SignalRow};
use crate::bits::BitString;

/// Key bits that survived sifting, with their positions in the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub bits: BitString,
    pub positions: Vec<usize>,
    /// Mismatch fraction against the other side. Known only to the simulator.
    pub qber_truth: f64,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Whether a signal of `protocol` enters the sifted key.
pub(crate) fn is_kept(protocol: ProtocolId, row: &SignalRow) -> bool {
    let Some(_) = row.bob_outcome.bit() else {
        return false;
    };
    match protocol {
        ProtocolId::Bb84 | ProtocolId::SixState | ProtocolId::FourPlusTwo => {
            row.alice_setting == row.bob_setting
        }
        ProtocolId::Ekert => match (row.alice_setting, row.bob_setting) {
            (Setting::Direction(a), Setting::Direction(b)) => (a - b).abs() < 1e-9,
            _ => false,
        },
        ProtocolId::B92 | ProtocolId::Gv | ProtocolId::KoashiImoto => true,
    }
}

/// Bob's key bit. The singlet gives anticorrelated results along shared
/// directions, so Bob inverts his.
pub(crate) fn bob_key_bit(protocol: ProtocolId, raw: bool) -> bool {
    if protocol == ProtocolId::Ekert {
        !raw
    } else {
        raw
    }
}

/// Split the record into Alice's and Bob's sifted keys.
pub fn sift(record: &SessionRecord) -> (SiftedKey, SiftedKey) {
    let protocol = record.config().protocol;
    let mut positions = Vec::new();
    let mut alice = BitString::new();
    let mut bob = BitString::new();
    for row in record.rows().iter().filter(|r| is_kept(protocol, r)) {
        positions.push(row.index);
        alice.push(row.alice_bit());
        bob.push(bob_key_bit(protocol, row.bob_outcome.bit().expect("kept rows clicked")));
    }
    let qber = if alice.is_empty() {
        0.0
    } else {
        alice.hamming_distance(&bob) as f64 / alice.len() as f64
    };
    (
        SiftedKey {
            bits: alice,
            positions: positions.clone(),
            qber_truth: qber,
        },
        SiftedKey {
            bits: bob,
            positions,
            qber_truth: qber,
        },
    )
}
