use serde::{Deserialize, Serialize};

use super::sift::is_kept;
use super::SessionRecord;
use crate::analytics::binary_information;

/// Eve's standing on the sifted key after the public discussion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveKnowledge {
    pub sifted: usize,
    /// Sifted positions where Eve's guess is certain.
    pub conclusive: usize,
    /// `conclusive / sifted`.
    pub matched_fraction: f64,
    /// Share of conclusive guesses equal to Alice's bit.
    pub conditional_correctness: f64,
    /// Shannon information per sifted bit: each class of positions
    /// (conclusive, inconclusive guess, no guess) contributes its share times
    /// the information of a binary channel at its error rate.
    pub information_per_bit: f64,
}

pub fn eve_knowledge(record: &SessionRecord) -> EveKnowledge {
    let protocol = record.config().protocol;
    let rows = record.rows();
    let sifted = rows.iter().filter(|r| is_kept(protocol, r)).count();
    let (mut n_c, mut ok_c, mut n_i, mut ok_i) = (0usize, 0usize, 0usize, 0usize);
    for g in record.eve_guesses() {
        let correct = (g.guess != 0) == rows[g.index].alice_bit();
        if g.conclusive {
            n_c += 1;
            ok_c += correct as usize;
        } else {
            n_i += 1;
            ok_i += correct as usize;
        }
    }
    let class = |n: usize, ok: usize| {
        if n == 0 || sifted == 0 {
            0.0
        } else {
            n as f64 / sifted as f64 * binary_information(1.0 - ok as f64 / n as f64)
        }
    };
    EveKnowledge {
        sifted,
        conclusive: n_c,
        matched_fraction: if sifted == 0 { 0.0 } else { n_c as f64 / sifted as f64 },
        conditional_correctness: if n_c == 0 { 0.0 } else { ok_c as f64 / n_c as f64 },
        information_per_bit: class(n_c, ok_c) + class(n_i, ok_i),
    }
}

/// Inputs to the multi-photon counting condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PnsCounts {
    pub multi_photon_sent: u64,
    pub received: u64,
}

pub fn pns_counts(record: &SessionRecord) -> PnsCounts {
    let rows = record.rows();
    PnsCounts {
        multi_photon_sent: rows.iter().filter(|r| r.photons >= 2).count() as u64,
        received: rows.iter().filter(|r| r.bob_outcome.clicked()).count() as u64,
    }
}
