//! Ordered binary strings: messages, ciphertexts, identity strings, keys.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::rng::RandomSource;

/// An ordered sequence of bits.
///
/// Serializes as a compact `"0101"` string so transcripts stay readable and
/// byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// All-zero string of the given length.
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Uniformly random string of the given length.
    pub fn random(len: usize, rng: &mut RandomSource) -> Self {
        Self((0..len).map(|_| rng.coin()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        self.0[i] = bit;
    }

    /// Flip the bit at `i`.
    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Bitwise XOR. Involutive: `a.xor(b)?.xor(b)? == a`.
    pub fn xor(&self, other: &BitString) -> Result<BitString, Error> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                context: "xor",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(BitString(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a ^ b)
                .collect(),
        ))
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize, Error> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                context: "hamming_distance",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl Index<usize> for BitString {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidBitChar(other)),
            })
            .collect::<Result<Vec<bool>, Error>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}
