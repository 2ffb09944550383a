use serde::{Deserialize, Serialize};

use super::{ProtocolId, SessionError, SessionRecord, Setting};

/// Fewest pairs in the four CHSH settings before `S` is estimated.
pub const CHSH_MIN_PAIRS: usize = 1000;

const A: f64 = 0.0;
const A_PRIME: f64 = 90.0;
const B: f64 = 45.0;
const B_PRIME: f64 = 135.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    /// `|E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|`
    pub s: f64,
    /// Correlators in the order `(a,b)`, `(a,b′)`, `(a′,b)`, `(a′,b′)`.
    pub correlators: [f64; 4],
    pub pairs: usize,
}

/// Bell test on the detected pairs measured along the non-shared directions,
/// `a = 0°`, `a′ = 90°` for Alice and `b = 45°`, `b′ = 135°` for Bob.
pub fn chsh_statistic(record: &SessionRecord) -> Result<ChshEstimate, SessionError> {
    if record.config().protocol != ProtocolId::Ekert {
        return Err(SessionError::InvalidConfig(format!(
            "CHSH needs an ekert session, got {}",
            record.config().protocol
        )));
    }
    let settings = [(A, B), (A, B_PRIME), (A_PRIME, B), (A_PRIME, B_PRIME)];
    // (sum of ±1 products, count) per setting pair
    let mut acc = [(0i64, 0usize); 4];
    for row in record.rows() {
        let (Setting::Direction(a), Setting::Direction(b)) = (row.alice_setting, row.bob_setting)
        else {
            continue;
        };
        let Some(bob) = row.bob_outcome.bit() else {
            continue;
        };
        let Some(k) = settings
            .iter()
            .position(|&(sa, sb)| (sa - a).abs() < 1e-9 && (sb - b).abs() < 1e-9)
        else {
            continue;
        };
        acc[k].0 += if row.alice_bit() == bob { 1 } else { -1 };
        acc[k].1 += 1;
    }
    let pairs: usize = acc.iter().map(|a| a.1).sum();
    if pairs < CHSH_MIN_PAIRS || acc.iter().any(|a| a.1 == 0) {
        return Err(SessionError::InsufficientSamples {
            what: "pairs in the CHSH settings",
            needed: CHSH_MIN_PAIRS,
            got: pairs,
        });
    }
    let e = acc.map(|(sum, n)| sum as f64 / n as f64);
    Ok(ChshEstimate {
        s: (e[0] - e[1] + e[2] + e[3]).abs(),
        correlators: e,
        pairs,
    })
}
