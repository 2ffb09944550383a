use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cascade::{masked_parity, random_mask};
use super::{PostprocError, ReconciledKey};
use crate::bits::BitString;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalKey {
    pub bits: BitString,
    pub n_fin: usize,
    pub n_s: u32,
    pub tau1: f64,
    /// Upper bound on Eve's information about the whole final key, in bits.
    pub eve_info_bound: f64,
    /// Publicly disclosed bits subtracted on top of the τ₁ shrinkage.
    pub leak_deducted: usize,
}

/// `log2(2^−n_S + 1)`, about `2^−n_S / ln 2` for large `n_S`.
pub fn eve_info_bound(n_s: u32) -> f64 {
    (-(n_s as f64)).exp2().ln_1p() / std::f64::consts::LN_2
}

/// `floor((1 − τ₁)·n_rec) − n_S − leak`, which may be negative.
pub fn final_length(n_rec: usize, tau1: f64, n_s: u32, leak: usize) -> i64 {
    ((1.0 - tau1) * n_rec as f64).floor() as i64 - n_s as i64 - leak as i64
}

/// `τ₁ = 1 + log2(P_coll) / n_rec`, for `2^−n_rec ≤ P_coll ≤ 1`.
pub fn tau1_from_pcoll(p_coll: f64, n_rec: usize) -> Result<f64, PostprocError> {
    let out = || PostprocError::CollisionOutOfRange { p_coll, n_rec };
    if n_rec == 0 || !(p_coll > 0.0 && p_coll <= 1.0) {
        return Err(out());
    }
    let log = p_coll.log2();
    if log < -(n_rec as f64) - 1e-9 {
        return Err(out());
    }
    Ok((1.0 + log / n_rec as f64).max(0.0))
}

/// Shrink the reconciled key to `n_fin` bits, each the parity of an
/// independent uniformly random subset of the key.
pub fn privacy_amplify<R: Rng + ?Sized>(
    key: &ReconciledKey,
    tau1: f64,
    n_s: u32,
    rng: &mut R,
) -> Result<FinalKey, PostprocError> {
    privacy_amplify_deducting(key, tau1, n_s, 0, rng)
}

/// [`privacy_amplify`] that also removes `leak` bits of public disclosure
/// from the output length.
pub fn privacy_amplify_deducting<R: Rng + ?Sized>(
    key: &ReconciledKey,
    tau1: f64,
    n_s: u32,
    leak: usize,
    rng: &mut R,
) -> Result<FinalKey, PostprocError> {
    if !(0.0..=1.0).contains(&tau1) {
        return Err(PostprocError::InvalidParameter(format!(
            "tau1 must lie in [0, 1], got {tau1}"
        )));
    }
    let n_fin = final_length(key.n_rec, tau1, n_s, leak);
    if n_fin < 1 {
        return Err(PostprocError::KeyExhausted { n_fin });
    }
    let words = key.bits.to_words();
    let bits: BitString = (0..n_fin)
        .map(|_| masked_parity(&words, &random_mask(words.len(), key.n_rec, rng)))
        .collect();
    Ok(FinalKey {
        bits,
        n_fin: n_fin as usize,
        n_s,
        tau1,
        eve_info_bound: eve_info_bound(n_s),
        leak_deducted: leak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconciled(n: usize, seed: u64) -> ReconciledKey {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ReconciledKey {
            bits: (0..n).map(|_| rng.random::<bool>()).collect(),
            n_rec: n,
            leaked_bits: 0,
            residual_mismatch_prob: 0.0,
        }
    }

    #[test]
    fn documented_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k = reconciled(1000, 1);
        assert_eq!(privacy_amplify(&k, 0.0, 0, &mut rng).unwrap().n_fin, 1000);
        let f = privacy_amplify(&k, 0.4604, 30, &mut rng).unwrap();
        assert_eq!(f.n_fin, 509);
        assert_eq!(f.bits.len(), 509);
        assert!((f.eve_info_bound - 1.3437e-9).abs() < 1e-12);
    }

    #[test]
    fn exhausted_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k = reconciled(100, 1);
        assert_eq!(
            privacy_amplify(&k, 0.5, 50, &mut rng).unwrap_err(),
            PostprocError::KeyExhausted { n_fin: 0 }
        );
        assert!(privacy_amplify_deducting(&k, 0.0, 0, 100, &mut rng).is_err());
    }

    #[test]
    fn same_subsets_give_same_key() {
        let k = reconciled(777, 2);
        let a = privacy_amplify(&k, 0.3, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = privacy_amplify(&k, 0.3, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collision_probability_to_shrinkage() {
        assert_eq!(tau1_from_pcoll(1.0, 100).unwrap(), 1.0);
        assert!(tau1_from_pcoll(2f64.powi(-100), 100).unwrap().abs() < 1e-12);
        assert!((tau1_from_pcoll(2f64.powi(-50), 100).unwrap() - 0.5).abs() < 1e-12);
        assert!(tau1_from_pcoll(2f64.powi(-101), 100).is_err());
        assert!(tau1_from_pcoll(1.5, 100).is_err());
        assert!(tau1_from_pcoll(0.0, 100).is_err());
    }
}
