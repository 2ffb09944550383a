use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PostprocError;
use crate::bits::BitString;
use crate::protocols::SiftedKey;

/// Smallest public sample an error estimate is based on.
pub const MIN_SAMPLE: usize = 50;
/// Smallest sifted key the estimator accepts.
pub const MIN_KEY: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub e_hat: f64,
    pub sample_size: usize,
    pub mismatches: usize,
    /// Keys with the disclosed sample removed.
    pub alice: SiftedKey,
    pub bob: SiftedKey,
}

/// Compare a uniformly chosen sample of positions in public and drop it from
/// both keys. The remaining length is `ceil((1 − f)·n)`.
pub fn estimate_qber<R: Rng + ?Sized>(
    alice: &SiftedKey,
    bob: &SiftedKey,
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate, PostprocError> {
    let n = alice.len();
    if n != bob.len() {
        return Err(PostprocError::LengthMismatch { alice: n, bob: bob.len() });
    }
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(PostprocError::InvalidParameter(format!(
            "sample_fraction must lie in (0, 1), got {sample_fraction}"
        )));
    }
    if n < MIN_KEY {
        return Err(PostprocError::Estimation { what: "sifted bits", needed: MIN_KEY, got: n });
    }
    let keep = ((1.0 - sample_fraction) * n as f64).ceil() as usize;
    let k = n - keep;
    if k < MIN_SAMPLE {
        return Err(PostprocError::Estimation { what: "sample positions", needed: MIN_SAMPLE, got: k });
    }
    let mut sampled = vec![false; n];
    for i in index::sample(rng, n, k) {
        sampled[i] = true;
    }
    let mismatches = (0..n)
        .filter(|&i| sampled[i] && alice.bits[i] != bob.bits[i])
        .count();
    let rest = |key: &SiftedKey| {
        let mut bits = BitString::with_capacity(keep);
        let mut positions = Vec::with_capacity(keep);
        for i in (0..n).filter(|&i| !sampled[i]) {
            bits.push(key.bits[i]);
            positions.push(key.positions[i]);
        }
        (bits, positions)
    };
    let (a_bits, a_pos) = rest(alice);
    let (b_bits, b_pos) = rest(bob);
    let qber = if a_bits.is_empty() {
        0.0
    } else {
        a_bits.hamming_distance(&b_bits) as f64 / a_bits.len() as f64
    };
    Ok(QberEstimate {
        e_hat: mismatches as f64 / k as f64,
        sample_size: k,
        mismatches,
        alice: SiftedKey { bits: a_bits, positions: a_pos, qber_truth: qber },
        bob: SiftedKey { bits: b_bits, positions: b_pos, qber_truth: qber },
    })
}
