//! Counter-based seed derivation.
//!
//! A stream seed is `SHA-256("mmkeygen/seed/v1" || master (LE u64) ||
//! index (LE u64) || label)`, used directly as a ChaCha20 key. Streams for
//! different indices or labels are independent of evaluation order, which
//! lets trials run in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"mmkeygen/seed/v1";

pub fn derive_seed(master: u64, index: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// First eight bytes of [`derive_seed`], little-endian.
pub fn derive_u64(master: u64, index: u64, label: &str) -> u64 {
    let s = derive_seed(master, index, label);
    u64::from_le_bytes(s[..8].try_into().expect("eight bytes"))
}

pub fn stream(master: u64, index: u64, label: &str) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(master, index, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn stable_and_distinct() {
        assert_eq!(derive_seed(1, 2, "x"), derive_seed(1, 2, "x"));
        assert_ne!(derive_seed(1, 2, "x"), derive_seed(1, 3, "x"));
        assert_ne!(derive_seed(1, 2, "x"), derive_seed(2, 2, "x"));
        assert_ne!(derive_seed(1, 2, "x"), derive_seed(1, 2, "y"));
        assert_eq!(stream(5, 0, "noise").next_u64(), stream(5, 0, "noise").next_u64());
    }

    #[test]
    fn known_vector() {
        // pins the derivation so stored results stay reproducible
        let mut h = Sha256::new();
        h.update(b"mmkeygen/seed/v1");
        h.update([7, 0, 0, 0, 0, 0, 0, 0]);
        h.update([3, 0, 0, 0, 0, 0, 0, 0]);
        h.update(b"trial");
        let expect: [u8; 32] = h.finalize().into();
        assert_eq!(derive_seed(7, 3, "trial"), expect);
    }
}
