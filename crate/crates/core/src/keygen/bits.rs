use std::fmt;

use crate::error::{Error, Result};

/// Packed bit sequence, least significant bit first within each word.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i / 64] |= 1 << (i % 64);
            }
        }
        s
    }

    /// Parses a string of `'0'` and `'1'` characters.
    pub fn parse(s: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bools(&b))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_word(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.push(value >> k & 1 == 1);
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the bits at `positions`.
    pub fn parity_of(&self, positions: &[usize]) -> bool {
        positions.iter().fold(false, |acc, &p| acc ^ self.get(p))
    }

    /// Bits at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> BitString {
        let mut out = BitString::zeros(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            if self.get(p) {
                out.words[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }

    /// Number of positions where the two strings differ.
    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len, other.len));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}: ", self.len)?;
        for b in self.iter().take(128) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = BitString::new();
        for b in iter {
            s.push(b);
        }
        s
    }
}

/// Bit agreement ratio. Empty strings agree trivially.
pub fn bar(a: &BitString, b: &BitString) -> Result<f64> {
    let diff = a.hamming(b)?;
    if a.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 - diff as f64 / a.len() as f64)
}

/// Bit disagreement ratio, `1 - bar`.
pub fn bdr(a: &BitString, b: &BitString) -> Result<f64> {
    bar(a, b).map(|x| 1.0 - x)
}

pub fn xor_combine(a: &BitString, b: &BitString) -> Result<BitString> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(BitString {
        words: a.words.iter().zip(&b.words).map(|(x, y)| x ^ y).collect(),
        len: a.len,
    })
}

/// Reflected binary Gray code.
pub fn gray_encode(x: u64) -> u64 {
    x ^ (x >> 1)
}

pub fn gray_decode(mut g: u64) -> u64 {
    let mut x = g;
    while g > 0 {
        g >>= 1;
        x ^= g;
    }
    x
}
