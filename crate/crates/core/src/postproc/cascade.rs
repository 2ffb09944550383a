//! Multi-pass block-parity reconciliation.
//!
//! Pass 1 splits the key into blocks of `ceil(0.73 / e)` bits; each later
//! pass shuffles the positions and doubles the block size. A block whose
//! parities differ is bisected by disclosing the parity of its left half
//! until the error is found. Correcting a bit flips the parity of the block
//! holding it in every earlier pass, and any block that becomes odd is
//! bisected in turn. Alice's parities are cached, so a sub-block is
//! disclosed at most once.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PostprocError;
use crate::analytics::shannon_min_leakage;
use crate::bits::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub passes: usize,
    /// First-pass block size is `ceil(block_factor / e_hat)`.
    pub block_factor: f64,
    /// Random-subset parities compared after the last pass.
    pub verification_bits: usize,
    /// Send parities one-time-padded with pre-shared key instead of in clear.
    pub encrypt_parities: bool,
}

impl Default for CascadeParams {
    fn default() -> Self {
        Self {
            passes: 4,
            block_factor: 0.73,
            verification_bits: 64,
            encrypt_parities: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciledKey {
    pub bits: BitString,
    pub n_rec: usize,
    /// Parity bits disclosed in clear.
    pub leaked_bits: usize,
    /// Upper bound on the chance the two keys still differ.
    pub residual_mismatch_prob: f64,
}

/// Public disclosure of one session, one counter per kind of bit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub estimation_bits: usize,
    pub parity_bits: usize,
    pub verification_bits: usize,
    /// Parities sent under one-time pad: key consumed, nothing leaked.
    pub encrypted_parity_bits: usize,
    pub block_sizes: Vec<usize>,
    pub corrected_errors: usize,
    /// `n·h(e_hat)` for the reconciled length.
    pub shannon_min: f64,
}

impl LeakageReport {
    /// Everything Eve saw in clear about the reconciled key.
    pub fn key_leakage(&self) -> usize {
        self.parity_bits + self.verification_bits
    }

    pub fn total_public(&self) -> usize {
        self.estimation_bits + self.key_leakage()
    }

    /// Disclosed parities over the Shannon minimum. Infinite at zero error.
    pub fn efficiency(&self) -> f64 {
        (self.parity_bits + self.encrypted_parity_bits) as f64 / self.shannon_min
    }

    pub fn efficiency_with_verification(&self) -> f64 {
        (self.parity_bits + self.encrypted_parity_bits + self.verification_bits) as f64
            / self.shannon_min
    }
}

struct Pass {
    /// Position in pass order → key index.
    order: Vec<usize>,
    /// Key index → position in pass order.
    slot: Vec<usize>,
    block: usize,
    bob_parity: Vec<bool>,
    alice_parity: Vec<bool>,
}

impl Pass {
    fn block_of(&self, key_index: usize) -> usize {
        self.slot[key_index] / self.block
    }

    fn range(&self, b: usize) -> (usize, usize) {
        let lo = b * self.block;
        (lo, (lo + self.block).min(self.order.len()))
    }
}

struct Session<'a> {
    alice: &'a [bool],
    bob: Vec<bool>,
    passes: Vec<Pass>,
    /// Alice's parity of `(pass, lo, hi)` in pass order, disclosed or implied.
    known: HashMap<(usize, usize, usize), bool>,
    disclosed: usize,
    corrected: usize,
}

impl Session<'_> {
    fn alice_parity(&mut self, p: usize, lo: usize, hi: usize) -> bool {
        if let Some(&v) = self.known.get(&(p, lo, hi)) {
            return v;
        }
        let order = &self.passes[p].order;
        let v = order[lo..hi].iter().fold(false, |acc, &i| acc ^ self.alice[i]);
        self.known.insert((p, lo, hi), v);
        self.disclosed += 1;
        v
    }

    fn bob_parity(&self, p: usize, lo: usize, hi: usize) -> bool {
        self.passes[p].order[lo..hi]
            .iter()
            .fold(false, |acc, &i| acc ^ self.bob[i])
    }

    /// Locate and fix one error in an odd block; returns the key index.
    fn bisect(&mut self, p: usize, b: usize) -> usize {
        let (mut lo, mut hi) = self.passes[p].range(b);
        let mut whole = self.passes[p].alice_parity[b];
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let left = self.alice_parity(p, lo, mid);
            // The right half's parity follows from the whole and the left.
            self.known.entry((p, mid, hi)).or_insert(whole ^ left);
            if left != self.bob_parity(p, lo, mid) {
                hi = mid;
                whole = left;
            } else {
                whole ^= left;
                lo = mid;
            }
        }
        let i = self.passes[p].order[lo];
        self.bob[i] = !self.bob[i];
        self.corrected += 1;
        i
    }

    fn run(&mut self, upto: usize) {
        let mut queue: Vec<(usize, usize)> = (0..self.passes[upto].alice_parity.len())
            .filter(|&b| self.passes[upto].alice_parity[b] != self.passes[upto].bob_parity[b])
            .map(|b| (upto, b))
            .collect();
        while let Some((p, b)) = queue.pop() {
            if self.passes[p].alice_parity[b] == self.passes[p].bob_parity[b] {
                continue;
            }
            let i = self.bisect(p, b);
            for r in 0..=upto {
                let rb = self.passes[r].block_of(i);
                let pass = &mut self.passes[r];
                pass.bob_parity[rb] = !pass.bob_parity[rb];
                if pass.bob_parity[rb] != pass.alice_parity[rb] {
                    queue.push((r, rb));
                }
            }
        }
    }
}

fn first_block(n: usize, e_hat: f64, factor: f64) -> usize {
    if e_hat <= 0.0 {
        n
    } else {
        ((factor / e_hat).ceil() as usize).clamp(1, n)
    }
}

/// Reconcile Bob's key to Alice's. Both returned keys carry the same bits
/// unless the final verification hash disagrees, in which case the keys are
/// discarded with [`PostprocError::ReconciliationFailed`].
pub fn error_correct<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    e_hat: f64,
    params: &CascadeParams,
    rng: &mut R,
) -> Result<(ReconciledKey, ReconciledKey, LeakageReport), PostprocError> {
    let n = alice.len();
    if n != bob.len() {
        return Err(PostprocError::LengthMismatch { alice: n, bob: bob.len() });
    }
    if !(0.0..=0.25).contains(&e_hat) {
        return Err(PostprocError::InvalidParameter(format!(
            "e_hat must lie in [0, 0.25], got {e_hat}"
        )));
    }
    if n == 0 || params.passes == 0 {
        return Err(PostprocError::InvalidParameter("nothing to reconcile".into()));
    }

    let mut s = Session {
        alice: alice.as_slice(),
        bob: bob.as_slice().to_vec(),
        passes: Vec::with_capacity(params.passes),
        known: HashMap::new(),
        disclosed: 0,
        corrected: 0,
    };
    let mut block = first_block(n, e_hat, params.block_factor);
    let mut block_sizes = Vec::new();
    for p in 0..params.passes {
        let mut order: Vec<usize> = (0..n).collect();
        if p > 0 {
            order.shuffle(rng);
        }
        let mut slot = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            slot[i] = pos;
        }
        let blocks = n.div_ceil(block);
        s.passes.push(Pass {
            order,
            slot,
            block,
            bob_parity: Vec::with_capacity(blocks),
            alice_parity: Vec::with_capacity(blocks),
        });
        for b in 0..blocks {
            let (lo, hi) = s.passes[p].range(b);
            let a = s.alice_parity(p, lo, hi);
            let bp = s.bob_parity(p, lo, hi);
            s.passes[p].alice_parity.push(a);
            s.passes[p].bob_parity.push(bp);
        }
        block_sizes.push(block);
        s.run(p);
        if block >= n {
            break;
        }
        block = (block * 2).min(n);
    }

    let bob_fixed = BitString::from(s.bob);
    if !verification_hashes_agree(alice, &bob_fixed, params.verification_bits, rng) {
        return Err(PostprocError::ReconciliationFailed);
    }

    let (parity_bits, encrypted) = if params.encrypt_parities {
        (0, s.disclosed)
    } else {
        (s.disclosed, 0)
    };
    let residual = 0.5f64.powi(params.verification_bits as i32);
    let key = |bits: BitString| ReconciledKey {
        n_rec: bits.len(),
        bits,
        leaked_bits: parity_bits,
        residual_mismatch_prob: residual,
    };
    let report = LeakageReport {
        estimation_bits: 0,
        parity_bits,
        verification_bits: params.verification_bits,
        encrypted_parity_bits: encrypted,
        block_sizes,
        corrected_errors: s.corrected,
        shannon_min: shannon_min_leakage(n, e_hat),
    };
    Ok((key(alice.clone()), key(bob_fixed), report))
}

/// Compare random-subset parities of both keys.
fn verification_hashes_agree<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    bits: usize,
    rng: &mut R,
) -> bool {
    let (wa, wb) = (alice.to_words(), bob.to_words());
    (0..bits).all(|_| {
        let mask = random_mask(wa.len(), alice.len(), rng);
        masked_parity(&wa, &mask) == masked_parity(&wb, &mask)
    })
}

/// Uniform random subset of `len` bits, packed like [`BitString::to_words`].
pub(crate) fn random_mask<R: Rng + ?Sized>(n_words: usize, len: usize, rng: &mut R) -> Vec<u64> {
    let mut mask: Vec<u64> = (0..n_words).map(|_| rng.random()).collect();
    let tail = len % 64;
    if tail != 0 {
        if let Some(last) = mask.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
    mask
}

pub(crate) fn masked_parity(words: &[u64], mask: &[u64]) -> bool {
    words
        .iter()
        .zip(mask)
        .fold(0u32, |acc, (w, m)| acc ^ (w & m).count_ones())
        & 1
        == 1
}
