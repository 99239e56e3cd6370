//! Fixed-width bit strings over `{0,1}ⁿ`.
//!
//! Bit 0 is the leftmost character of the textual form, so the first `m`
//! bits of a string are always its length-`m` prefix. Internally bits are
//! packed LSB-first into 64-bit words: bit `i` lives at position `i % 64` of
//! word `i / 64`. Unused high bits of the last word are always zero, which
//! keeps the derived `Eq`/`Hash` sound.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};

type Words = SmallVec<[u64; 2]>;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: Words,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    if bits.is_multiple_of(64) {
        u64::MAX
    } else {
        (1u64 << (bits % 64)) - 1
    }
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        let mut words = Words::new();
        words.resize(word_count(len), 0);
        BitString { len, words }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.clear_tail();
        s
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::empty();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Uniformly random string of the given width.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.gen();
        }
        s.clear_tail();
        s
    }

    /// Builds a string from the integer whose `len`-bit binary expansion
    /// (most significant bit first) is the string. Requires `len <= 64`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "from_index supports at most 64 bits");
        let mut s = Self::zeros(len);
        for i in 0..len {
            if (index >> (len - 1 - i)) & 1 == 1 {
                s.set(i, true);
            }
        }
        s
    }

    /// Inverse of [`BitString::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "to_index supports at most 64 bits");
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
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
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for width {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for width {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    /// The same string with one extra bit appended on the right.
    pub fn extended(&self, bit: bool) -> Self {
        let mut s = self.clone();
        s.push(bit);
        s
    }

    /// The length-`m` prefix.
    pub fn prefix(&self, m: usize) -> Self {
        assert!(m <= self.len);
        let mut words: Words = self.words[..word_count(m)].iter().copied().collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(m);
        }
        BitString { len: m, words }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product `s·x mod 2`.
    #[inline]
    pub fn dot(&self, other: &BitString) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// Hamming distance between two equal-width strings.
    #[inline]
    pub fn hamming(&self, other: &BitString) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Hamming distance between the first `m` bits of `self` and `other`.
    /// Both strings must be at least `m` bits wide.
    #[inline]
    pub fn prefix_hamming(&self, other: &BitString, m: usize) -> usize {
        debug_assert!(m <= self.len && m <= other.len);
        let full = m / 64;
        let mut d = 0usize;
        for w in 0..full {
            d += (self.words[w] ^ other.words[w]).count_ones() as usize;
        }
        if !m.is_multiple_of(64) {
            let mask = tail_mask(m);
            d += ((self.words[full] ^ other.words[full]) & mask).count_ones() as usize;
        }
        d
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len);
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a ^ b)
            .collect();
        BitString { len: self.len, words }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }
}

/// Lexicographic order on the textual form, `'0' < '1'`, with a proper
/// prefix sorting before its extensions.
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len);
        let n_words = word_count(common);
        for w in 0..n_words {
            let mut diff = self.words[w] ^ other.words[w];
            if w + 1 == n_words {
                diff &= tail_mask(common);
            }
            if diff != 0 {
                let bit = diff.trailing_zeros();
                return if (self.words[w] >> bit) & 1 == 1 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
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
        let mut out = BitString::empty();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => {
                    return Err(Error::Argument(format!(
                        "invalid character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let s = bs("0110");
        assert_eq!(s.len(), 4);
        assert!(!s.get(0) && s.get(1) && s.get(2) && !s.get(3));
        assert_eq!(s.to_string(), "0110");
        assert!("01a".parse::<BitString>().is_err());
    }

    #[test]
    fn index_is_msb_first() {
        assert_eq!(bs("0001").to_index(), 1);
        assert_eq!(bs("1000").to_index(), 8);
        assert_eq!(BitString::from_index(6, 4), bs("0110"));
    }

    #[test]
    fn prefix_and_distances() {
        let a = bs("0110");
        assert_eq!(a.prefix(2), bs("01"));
        assert_eq!(a.hamming(&bs("0000")), 2);
        assert_eq!(a.prefix_hamming(&bs("1111"), 2), 1);
        assert!(!bs("11").dot(&bs("11")));
        assert!(bs("10").dot(&bs("11")));
    }

    #[test]
    fn wide_strings_cross_word_boundary() {
        let mut a = BitString::zeros(130);
        a.set(64, true);
        a.set(129, true);
        let b = BitString::zeros(130);
        assert_eq!(a.hamming(&b), 2);
        assert_eq!(a.prefix_hamming(&b, 65), 1);
        assert_eq!(a.prefix(65).weight(), 1);
        assert!(a > b);
        assert_eq!(BitString::ones(70).weight(), 70);
    }

    proptest! {
        #[test]
        fn order_matches_textual_order(a in "[01]{0,80}", b in "[01]{0,80}") {
            prop_assert_eq!(bs(&a).cmp(&bs(&b)), a.cmp(&b));
        }

        #[test]
        fn prefix_hamming_matches_chars(a in "[01]{70}", b in "[01]{70}", m in 0usize..=70) {
            let expect = a.chars().zip(b.chars()).take(m).filter(|(x, y)| x != y).count();
            prop_assert_eq!(bs(&a).prefix_hamming(&bs(&b), m), expect);
            prop_assert_eq!(bs(&a).prefix(m).hamming(&bs(&b).prefix(m)), expect);
        }
    }
}
