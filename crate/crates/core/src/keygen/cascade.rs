//! Cascade information reconciliation.
//!
//! Bob corrects his string toward Alice's using block parities over
//! seeded shuffles, binary search inside odd blocks, and back-tracking into
//! earlier passes after every correction. Every parity Alice discloses is
//! counted as leaked.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

use super::bits::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CascadeParams {
    pub passes: u32,
    pub initial_block: usize,
    /// Seed of the shared per-pass permutations.
    pub seed: u64,
}

impl CascadeParams {
    pub fn new(passes: u32, initial_block: usize, seed: u64) -> Result<Self> {
        let p = Self {
            passes,
            initial_block,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    /// Four passes with the initial block sized for an estimated error rate.
    pub fn for_error_rate(p_est: f64, seed: u64) -> Self {
        Self {
            passes: 4,
            initial_block: initial_block_for(p_est),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::InvalidParams("cascade needs at least one pass".into()));
        }
        if self.initial_block == 0 {
            return Err(Error::InvalidParams("cascade initial block must be >= 1".into()));
        }
        Ok(())
    }
}

/// `ceil(0.73 / p)`, at least 1. A zero estimate gives an unbounded block,
/// later capped at the string length.
pub fn initial_block_for(p_est: f64) -> usize {
    if p_est.is_nan() || p_est <= 0.0 {
        return usize::MAX;
    }
    ((0.73 / p_est).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeOutcome {
    pub corrected: BitString,
    pub leaked_bits: usize,
}

struct Pass {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    alice_parity: Vec<bool>,
    bob_parity: Vec<bool>,
}

struct Session<'a> {
    alice: &'a BitString,
    bob: BitString,
    passes: Vec<Pass>,
    leaked: usize,
}

impl Session<'_> {
    fn is_odd(&self, pass: usize, block: usize) -> bool {
        let p = &self.passes[pass];
        p.alice_parity[block] != p.bob_parity[block]
    }

    /// Halves the block until one position remains; Alice discloses the
    /// parity of each first half.
    fn binary_search(&mut self, pass: usize, block: usize) -> usize {
        let mut range = self.passes[pass].blocks[block].as_slice();
        while range.len() > 1 {
            let (first, second) = range.split_at(range.len() / 2);
            self.leaked += 1;
            range = if self.alice.parity_of(first) != self.bob.parity_of(first) {
                first
            } else {
                second
            };
        }
        range[0]
    }

    /// Fixes one error in an odd block, then follows every block that the
    /// correction turned odd until none remain.
    fn correct(&mut self, pass: usize, block: usize) {
        let mut pending = BTreeSet::from([(pass, block)]);
        while let Some((j, b)) = pending.pop_first() {
            if !self.is_odd(j, b) {
                continue;
            }
            let pos = self.binary_search(j, b);
            self.bob.flip(pos);
            for (k, p) in self.passes.iter_mut().enumerate() {
                let blk = p.block_of[pos];
                p.bob_parity[blk] ^= true;
                if p.alice_parity[blk] != p.bob_parity[blk] {
                    pending.insert((k, blk));
                }
            }
        }
    }
}

/// Runs Cascade with `a` as the reference string.
pub fn cascade(a: &BitString, b: &BitString, params: &CascadeParams) -> Result<CascadeOutcome> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    params.validate()?;
    let n = a.len();
    let mut s = Session {
        alice: a,
        bob: b.clone(),
        passes: Vec::with_capacity(params.passes as usize),
        leaked: 0,
    };
    if n == 0 {
        return Ok(CascadeOutcome {
            corrected: s.bob,
            leaked_bits: 0,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..params.passes {
        let size = params
            .initial_block
            .checked_shl(i)
            .filter(|&k| k >> i == params.initial_block)
            .unwrap_or(usize::MAX)
            .min(n);
        order.shuffle(&mut rng);
        let blocks: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
        let mut block_of = vec![0; n];
        for (bi, blk) in blocks.iter().enumerate() {
            for &p in blk {
                block_of[p] = bi;
            }
        }
        let alice_parity: Vec<bool> = blocks.iter().map(|blk| a.parity_of(blk)).collect();
        let bob_parity: Vec<bool> = blocks.iter().map(|blk| s.bob.parity_of(blk)).collect();
        s.leaked += blocks.len();
        let count = blocks.len();
        s.passes.push(Pass {
            blocks,
            block_of,
            alice_parity,
            bob_parity,
        });
        let pass = s.passes.len() - 1;
        for blk in 0..count {
            if s.is_odd(pass, blk) {
                s.correct(pass, blk);
            }
        }
    }
    Ok(CascadeOutcome {
        corrected: s.bob,
        leaked_bits: s.leaked,
    })
}

/// Outcome of sampling-based error estimation followed by Cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    /// Alice's string with the disclosed sample removed.
    pub alice: BitString,
    /// Bob's corrected string, same positions as `alice`.
    pub bob: BitString,
    pub p_est: f64,
    pub sampled_bits: usize,
    pub parity_bits: usize,
}

impl Reconciliation {
    /// Disclosed sample plus every parity exchanged.
    pub fn leaked_bits(&self) -> usize {
        self.sampled_bits + self.parity_bits
    }
}

/// Publicly compares a random `sample_fraction` of positions to estimate the
/// error rate, drops them, and reconciles the rest with four-pass Cascade.
pub fn reconcile(a: &BitString, b: &BitString, sample_fraction: f64, seed: u64) -> Result<Reconciliation> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if !(0.0..1.0).contains(&sample_fraction) {
        return Err(Error::InvalidParams(format!(
            "sample fraction {sample_fraction} must be in [0, 1)"
        )));
    }
    let n = a.len();
    let m = ((n as f64 * sample_fraction).round() as usize).min(n);
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5a4d_504c_4553_4554);
    let mut sampled = vec![false; n];
    for i in index::sample(&mut rng, n, m) {
        sampled[i] = true;
    }
    let sample: Vec<usize> = (0..n).filter(|&i| sampled[i]).collect();
    let rest: Vec<usize> = (0..n).filter(|&i| !sampled[i]).collect();
    let errors = a.select(&sample).hamming(&b.select(&sample))?;
    // one phantom error keeps the block finite when the sample is clean
    let p_est = if m == 0 {
        0.0
    } else if errors == 0 {
        0.5 / m as f64
    } else {
        errors as f64 / m as f64
    };
    let alice = a.select(&rest);
    let params = CascadeParams::for_error_rate(p_est, seed);
    let out = cascade(&alice, &b.select(&rest), &params)?;
    Ok(Reconciliation {
        alice,
        bob: out.corrected,
        p_est,
        sampled_bits: m,
        parity_bits: out.leaked_bits,
    })
}
