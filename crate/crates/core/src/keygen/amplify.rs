//! Privacy amplification by Toeplitz hashing.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::bits::BitString;

/// Default number of extra bits discarded beyond the leakage count.
pub const DEFAULT_SAFETY_MARGIN: usize = 32;

/// Final key together with the accounting that sized it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub key: BitString,
    pub leaked_bits: usize,
    pub safety_margin: usize,
}

/// Output length `max(0, n - leaked - margin)`.
pub fn amplified_length(raw_len: usize, leaked_bits: usize, safety_margin: usize) -> usize {
    raw_len.saturating_sub(leaked_bits).saturating_sub(safety_margin)
}

/// Hashes `raw` to `m = max(0, n - leaked - margin)` bits with an `m x n`
/// binary Toeplitz matrix `T[i][j] = r[j - i + m - 1]`, where `r` holds
/// `n + m - 1` bits drawn from a ChaCha20 stream seeded with `seed`.
pub fn privacy_amplify(raw: &BitString, leaked_bits: usize, safety_margin: usize, seed: u64) -> KeyMaterial {
    let n = raw.len();
    let m = amplified_length(n, leaked_bits, safety_margin);
    let mut key = BitString::zeros(m);
    if m > 0 {
        let diag_len = n + m - 1;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        // one spare word so unaligned windows never read past the end
        let mut diag: Vec<u64> = (0..diag_len.div_ceil(64) + 1).map(|_| rng.next_u64()).collect();
        let tail = diag_len % 64;
        if tail != 0 {
            let last = diag_len / 64;
            diag[last] &= (1u64 << tail) - 1;
        }
        for w in diag.iter_mut().skip(diag_len.div_ceil(64)) {
            *w = 0;
        }
        let raw_words = raw.words();
        for i in 0..m {
            let offset = m - 1 - i;
            let (q, s) = (offset / 64, offset % 64);
            let mut acc = 0u64;
            for (w, rw) in raw_words.iter().enumerate() {
                let lo = diag[q + w] >> s;
                let hi = if s == 0 { 0 } else { diag[q + w + 1] << (64 - s) };
                acc ^= (lo | hi) & rw;
            }
            if acc.count_ones() % 2 == 1 {
                key.set(i, true);
            }
        }
    }
    KeyMaterial {
        key,
        leaked_bits,
        safety_margin,
    }
}
