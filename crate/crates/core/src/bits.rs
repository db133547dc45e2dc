//! Fixed-length bit strings packed into `u64` words.
//!
//! Bit `i` is position `i` of the textual form (index 0 leftmost) and qubit `i`
//! of a circuit. When a bit string is viewed as a basis-state index, bit `i` is
//! the `2^i` place.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    /// Builds a string from the low `len` bits of a basis-state index.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "index form limited to 64 bits");
        let mut s = Self::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            s.words[0] = index & mask;
        }
        s
    }

    /// Inverse of [`from_index`](Self::from_index).
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "index form limited to 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    /// Uniformly random string.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = BitString {
            len,
            words: (0..word_count(len)).map(|_| rng.gen::<u64>()).collect(),
        };
        s.clear_tail();
        s
    }

    /// String with i.i.d. Bernoulli(`p`) bits.
    pub fn bernoulli<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            if rng.gen::<f64>() < p {
                s.set(i, true);
            }
        }
        s
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let bit = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= bit;
        } else {
            self.words[i >> 6] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of `popcount(self AND other)`; `true` when odd.
    #[inline]
    pub fn and_parity(&self, other: &BitString) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// `(-1)^(self . other)` as ±1.
    #[inline]
    pub fn parity_sign(&self, other: &BitString) -> i32 {
        if self.and_parity(other) {
            -1
        } else {
            1
        }
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                other => return Err(Error::Parse(format!("bad bit character {other:?}"))),
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
