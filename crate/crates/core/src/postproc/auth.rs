//! One-time message authentication.
//!
//! A tag is a polynomial hash of the message over GF(2^64), keyed by 64
//! fresh secret bits, truncated to `width` bits and masked with `width`
//! more. Each tag uses its own key bits, which are never handed out again.

use serde::{Deserialize, Serialize};

use super::PostprocError;
use crate::bits::BitString;

pub const DEFAULT_TAG_WIDTH: u32 = 64;

/// Secret bits shared in advance, handed out front to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthReservoir {
    bits: BitString,
    cursor: usize,
}

impl AuthReservoir {
    pub fn new(bits: BitString) -> Self {
        Self { bits, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn take(&mut self, k: usize) -> Result<BitString, PostprocError> {
        if k > self.remaining() {
            return Err(PostprocError::AuthUnavailable {
                needed: k,
                available: self.remaining(),
            });
        }
        let out = self.bits.as_slice()[self.cursor..self.cursor + k].iter().copied().collect();
        self.cursor += k;
        Ok(out)
    }

    fn take_word(&mut self, k: usize) -> Result<u64, PostprocError> {
        let bits = self.take(k)?;
        Ok(bits.iter().enumerate().fold(0u64, |w, (i, b)| w | ((b as u64) << i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthTag {
    pub tag: u64,
    pub width: u32,
    pub key_bits_consumed: usize,
}

/// `x^64 + x^4 + x^3 + x + 1`, low terms.
const REDUCTION: u64 = 0x1b;

fn gf_mul(mut a: u64, mut b: u64) -> u64 {
    let mut acc = 0u64;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        let carry = a >> 63;
        a <<= 1;
        if carry == 1 {
            a ^= REDUCTION;
        }
    }
    acc
}

/// Message blocks: 8-byte big-endian chunks, zero-padded, then the bit length.
fn blocks(message: &[u8]) -> impl Iterator<Item = u64> + '_ {
    message
        .chunks(8)
        .map(|c| {
            let mut buf = [0u8; 8];
            buf[..c.len()].copy_from_slice(c);
            u64::from_be_bytes(buf)
        })
        .chain(std::iter::once((message.len() as u64).wrapping_mul(8)))
}

fn poly_hash(message: &[u8], k: u64) -> u64 {
    // Horner: Σ m_i k^(L−i+1)
    blocks(message).fold(0u64, |h, m| gf_mul(h ^ m, k))
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn check_width(width: u32) -> Result<(), PostprocError> {
    if (1..=64).contains(&width) {
        Ok(())
    } else {
        Err(PostprocError::InvalidParameter(format!(
            "tag width must lie in [1, 64], got {width}"
        )))
    }
}

fn compute(message: &[u8], width: u32, secret: &mut AuthReservoir) -> Result<AuthTag, PostprocError> {
    check_width(width)?;
    let needed = 64 + width as usize;
    if secret.remaining() < needed {
        return Err(PostprocError::AuthUnavailable {
            needed,
            available: secret.remaining(),
        });
    }
    let k = secret.take_word(64)?;
    let pad = secret.take_word(width as usize)?;
    Ok(AuthTag {
        tag: (poly_hash(message, k) & mask(width)) ^ pad,
        width,
        key_bits_consumed: needed,
    })
}

/// Tag `message` with the next `64 + width` bits of `secret`.
pub fn authenticate(message: &[u8], width: u32, secret: &mut AuthReservoir) -> Result<AuthTag, PostprocError> {
    compute(message, width, secret)
}

/// Recompute the tag from the receiver's copy of the reservoir. Consumes the
/// same bits as [`authenticate`] did, accepted or not.
pub fn verify(message: &[u8], tag: &AuthTag, secret: &mut AuthReservoir) -> Result<bool, PostprocError> {
    Ok(compute(message, tag.width, secret)?.tag == tag.tag)
}

/// Chance that a forged message of `len` bytes passes: at most
/// `(blocks + 1) · 2^−width`.
pub fn forging_bound(len: usize, width: u32) -> f64 {
    ((len.div_ceil(8) + 1) as f64 * (-(width as f64)).exp2()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reservoir(n: usize, seed: u64) -> AuthReservoir {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AuthReservoir::new((0..n).map(|_| rng.random::<bool>()).collect())
    }

    #[test]
    fn field_multiplication() {
        assert_eq!(gf_mul(1, 0xdead_beef), 0xdead_beef);
        assert_eq!(gf_mul(0, 12345), 0);
        // x^63 · x = x^64 = x^4 + x^3 + x + 1
        assert_eq!(gf_mul(1 << 63, 2), REDUCTION);
        let (a, b, c) = (0x1234_5678_9abc_def0, 0x0fed_cba9_8765_4321, 0xffff_0000_ffff_0000);
        assert_eq!(gf_mul(a, b), gf_mul(b, a));
        assert_eq!(gf_mul(a, b ^ c), gf_mul(a, b) ^ gf_mul(a, c));
    }

    #[test]
    fn round_trip() {
        let mut alice = reservoir(256, 1);
        let mut bob = alice.clone();
        let tag = authenticate(b"bases: ZXXZ", 64, &mut alice).unwrap();
        assert!(verify(b"bases: ZXXZ", &tag, &mut bob).unwrap());
        assert_eq!(alice.consumed(), 128);
        assert_eq!(bob.consumed(), 128);
    }

    #[test]
    fn no_key_reuse() {
        let mut r = reservoir(128, 2);
        assert!(authenticate(b"m", 64, &mut r).is_ok());
        assert!(matches!(
            authenticate(b"m", 64, &mut r),
            Err(PostprocError::AuthUnavailable { needed: 128, available: 0 })
        ));
    }

    #[test]
    fn empty_and_zero_messages_differ() {
        let r = reservoir(256, 3);
        let t1 = authenticate(b"", 64, &mut r.clone()).unwrap();
        let t2 = authenticate(&[0u8], 64, &mut r.clone()).unwrap();
        assert_ne!(t1.tag, t2.tag);
    }

    #[test]
    fn bound() {
        assert_eq!(forging_bound(8, 64), 2.0 * 2f64.powi(-64));
        assert_eq!(forging_bound(1000, 1), 1.0);
    }
}
