//! Packed bit strings with fast agreement counting.
//!
//! Positions are 0-based in code; `Display` renders position 0 as the
//! leftmost character, matching the 1-based convention used in logs and
//! layout tables.

use rand::Rng;
use std::fmt;
use std::str::FromStr;

/// A fixed-length string over {0,1}, packed 64 bits per word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    /// The all-zeros string of length `len`.
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// A uniformly random string of length `len`.
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.gen()).collect();
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        BitString { words, len }
    }

    /// Builds a string by evaluating `f` at every position.
    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut out = BitString::zeros(len);
        for i in 0..len {
            if f(i) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Returns a copy with every position in `positions` flipped.
    pub fn with_flips(&self, positions: &[usize]) -> Self {
        let mut out = self.clone();
        for &p in positions {
            out.flip(p);
        }
        out
    }

    /// Number of ones in the whole string.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Number of positions where `self` and `other` agree.
    pub fn agreement(&self, other: &Self) -> usize {
        self.len - self.hamming(other)
    }

    /// Positions in `[0, len)` where `self` and `other` differ.
    pub fn differing_positions(&self, other: &Self) -> Vec<usize> {
        assert_eq!(self.len, other.len, "length mismatch");
        let mut out = Vec::new();
        for (wi, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut d = a ^ b;
            while d != 0 {
                let bit = d.trailing_zeros() as usize;
                out.push(wi * 64 + bit);
                d &= d - 1;
            }
        }
        out
    }

    /// Hamming distance restricted to positions `[start, start + len)`.
    pub fn hamming_in(&self, other: &Self, start: usize, len: usize) -> usize {
        debug_assert!(start + len <= self.len);
        // Word-aligned middle plus masked edges would be faster, but region
        // widths here are tens of bits; the simple loop is not a bottleneck.
        (start..start + len)
            .filter(|&i| self.get(i) != other.get(i))
            .count()
    }

    /// Iterator over all bits, position 0 first.
    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
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

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// Error parsing a bit string from text.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid bit character {0:?} (expected '0' or '1')")]
pub struct ParseBitStringError(char);

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::zeros(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                other => return Err(ParseBitStringError(other)),
            }
        }
        Ok(out)
    }
}
