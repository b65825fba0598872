//! Bit-packed binary strings.
//!
//! `BitString` stores symbols in `u64` words, lowest position first, and keeps
//! an explicit length so `"0"`, `"00"` and the empty string stay distinct.
//! Bits past `len` in the last word are always zero; equality and hashing rely
//! on that invariant.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseBitStringError {
    #[error("invalid symbol {found:?} at position {pos}; expected '0' or '1'")]
    InvalidSymbol { pos: usize, found: char },
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        BitString { words: Vec::new(), len: 0 }
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString { words: Vec::with_capacity(bits.div_ceil(WORD_BITS)), len: 0 }
    }

    /// The string `0^k`.
    pub fn zeros(k: usize) -> Self {
        BitString { words: vec![0; k.div_ceil(WORD_BITS)], len: k }
    }

    /// The string `1^k`.
    pub fn ones(k: usize) -> Self {
        let mut s = BitString::zeros(k);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.mask_tail();
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = BitString::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Symbol at position `i`, 0-based.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let w = self.len / WORD_BITS;
        if w == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[w] |= 1u64 << (self.len % WORD_BITS);
        }
        self.len += 1;
    }

    /// Shortens the string to `new_len` symbols.
    pub fn truncate(&mut self, new_len: usize) {
        assert!(new_len <= self.len, "cannot truncate {} to {new_len}", self.len);
        self.len = new_len;
        self.words.truncate(new_len.div_ceil(WORD_BITS));
        self.mask_tail();
    }

    /// Appends all of `other`.
    pub fn extend_from(&mut self, other: &BitString) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.extend_from_slice(&other.words);
            self.words.truncate((self.len + other.len).div_ceil(WORD_BITS));
            self.len += other.len;
            self.mask_tail();
        } else {
            for i in 0..other.len {
                self.push(other.bit(i));
            }
        }
    }

    /// Replaces the contents with a copy of `other`, reusing the allocation.
    pub fn copy_from(&mut self, other: &BitString) {
        self.words.clear();
        self.words.extend_from_slice(&other.words);
        self.len = other.len;
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// New string with `bit` prepended (`bit` becomes position 0).
    pub fn prepend(&self, bit: bool) -> BitString {
        let mut out = BitString::zeros(self.len + 1);
        if bit {
            out.words[0] |= 1;
        }
        for i in 0..self.words.len() {
            let lo = self.words[i] << 1;
            out.words[i] |= lo;
            let hi = self.words[i] >> (WORD_BITS - 1);
            if hi != 0 {
                out.words[i + 1] |= hi;
            }
        }
        out.mask_tail();
        out
    }

    /// Copy of `self[start .. start + count]` (0-based).
    pub fn slice(&self, start: usize, count: usize) -> BitString {
        assert!(start + count <= self.len, "slice {start}+{count} out of range {}", self.len);
        let mut out = BitString::zeros(count);
        for w in 0..out.words.len() {
            out.words[w] = self.word_at(start + w * WORD_BITS);
        }
        out.mask_tail();
        out
    }

    /// First `k` symbols.
    pub fn prefix(&self, k: usize) -> BitString {
        self.slice(0, k)
    }

    /// Last `k` symbols.
    pub fn suffix(&self, k: usize) -> BitString {
        self.slice(self.len - k, k)
    }

    /// Drops the last symbol.
    pub fn parent(&self) -> BitString {
        assert!(self.len > 0, "parent of empty string");
        let mut out = self.clone();
        out.truncate(out.len - 1);
        out
    }

    /// Drops the first symbol.
    pub fn parent_left(&self) -> BitString {
        assert!(self.len > 0, "parent_left of empty string");
        self.slice(1, self.len - 1)
    }

    /// Same string with the last symbol complemented.
    pub fn sibling(&self) -> BitString {
        assert!(self.len > 0, "sibling of empty string");
        let mut out = self.clone();
        out.flip(out.len - 1);
        out
    }

    /// Same string with the first symbol complemented.
    pub fn sibling_left(&self) -> BitString {
        assert!(self.len > 0, "sibling_left of empty string");
        let mut out = self.clone();
        out.flip(0);
        out
    }

    fn flip(&mut self, i: usize) {
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Symbol order reversed.
    pub fn reversed(&self) -> BitString {
        let mut out = BitString::with_capacity(self.len);
        for i in (0..self.len).rev() {
            out.push(self.bit(i));
        }
        out
    }

    /// True iff `pat` occurs at position `pos` (0-based, fully inside `self`).
    pub fn matches_at(&self, pos: usize, pat: &BitString) -> bool {
        if pos + pat.len > self.len {
            return false;
        }
        let full = pat.len / WORD_BITS;
        for w in 0..full {
            if self.word_at(pos + w * WORD_BITS) != pat.words[w] {
                return false;
            }
        }
        let rem = pat.len % WORD_BITS;
        if rem != 0 {
            let mask = (1u64 << rem) - 1;
            if self.word_at(pos + full * WORD_BITS) & mask != pat.words[full] {
                return false;
            }
        }
        true
    }

    pub fn starts_with(&self, pat: &BitString) -> bool {
        pat.len <= self.len && self.matches_at(0, pat)
    }

    pub fn ends_with(&self, pat: &BitString) -> bool {
        pat.len <= self.len && self.matches_at(self.len - pat.len, pat)
    }

    /// Naive O(|self|·|pat|) substring scan. The empty string is a substring
    /// of everything.
    pub fn contains_naive(&self, pat: &BitString) -> bool {
        if pat.len > self.len {
            return false;
        }
        (0..=self.len - pat.len).any(|pos| self.matches_at(pos, pat))
    }

    /// Length of the longest run of `symbol`.
    pub fn max_run(&self, symbol: bool) -> usize {
        let mut best = 0;
        let mut cur = 0;
        for i in 0..self.len {
            if self.bit(i) == symbol {
                cur += 1;
                best = best.max(cur);
            } else {
                cur = 0;
            }
        }
        best
    }

    /// Length of the trailing run of `symbol`.
    pub fn trailing_run(&self, symbol: bool) -> usize {
        let mut k = 0;
        while k < self.len && self.bit(self.len - 1 - k) == symbol {
            k += 1;
        }
        k
    }

    /// Length of the leading run of `symbol`.
    pub fn leading_run(&self, symbol: bool) -> usize {
        let mut k = 0;
        while k < self.len && self.bit(k) == symbol {
            k += 1;
        }
        k
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    /// FNV-1a over the packed words; stable across runs.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut mix = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        mix(self.len as u64);
        for &w in &self.words {
            mix(w);
        }
        h
    }

    /// Value of the string as an integer, position 0 at the lowest bit.
    /// Only valid for lengths up to 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 on length {}", self.len);
        if self.words.is_empty() {
            0
        } else {
            self.words[0]
        }
    }

    /// Inverse of `to_u64` for a given length.
    pub fn from_u64(value: u64, len: usize) -> BitString {
        assert!(len <= 64);
        let mut s = BitString::zeros(len);
        if len > 0 {
            s.words[0] = if len == 64 { value } else { value & ((1u64 << len) - 1) };
        }
        s
    }

    /// 64 bits of content starting at `bitpos`, zero-padded past the end.
    #[inline]
    fn word_at(&self, bitpos: usize) -> u64 {
        let w = bitpos / WORD_BITS;
        let off = bitpos % WORD_BITS;
        let lo = self.words.get(w).copied().unwrap_or(0) >> off;
        if off == 0 {
            lo
        } else {
            let hi = self.words.get(w + 1).copied().unwrap_or(0);
            lo | (hi << (WORD_BITS - off))
        }
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::with_capacity(s.len());
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => out.push(false),
                '1' => out.push(true),
                found => return Err(ParseBitStringError::InvalidSymbol { pos, found }),
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(D::Error::custom)
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
    fn parse_and_display_roundtrip() {
        for s in ["", "0", "1", "0110", "1100101000", "0000000000000000"] {
            assert_eq!(bs(s).to_string(), s);
        }
        assert_eq!(
            "01x".parse::<BitString>(),
            Err(ParseBitStringError::InvalidSymbol { pos: 2, found: 'x' })
        );
    }

    #[test]
    fn distinct_lengths_stay_distinct() {
        assert_ne!(bs("0"), bs("00"));
        assert_ne!(bs(""), bs("0"));
        assert_eq!(bs("0110"), bs("0110"));
    }

    #[test]
    fn prefix_suffix_family() {
        let s = bs("0110");
        assert_eq!(s.prefix(2), bs("01"));
        assert_eq!(s.suffix(2), bs("10"));
        assert_eq!(s.parent(), bs("011"));
        assert_eq!(s.sibling(), bs("0111"));
        assert_eq!(s.sibling_left(), bs("1110"));
        assert_eq!(s.parent_left(), bs("110"));
        assert_eq!(s.prefix(0), bs(""));
        assert_eq!(s.suffix(0), bs(""));
    }

    #[test]
    fn sibling_is_involution_and_shares_parent() {
        let s = bs("10011");
        assert_eq!(s.sibling().sibling(), s);
        assert_eq!(s.sibling().parent(), s.parent());
        assert_eq!(s.sibling_left().sibling_left(), s);
        assert_eq!(s.sibling_left().parent_left(), s.parent_left());
    }

    #[test]
    fn concat_prepend_push() {
        let mut s = bs("10");
        s.push(true);
        assert_eq!(s, bs("101"));
        assert_eq!(s.prepend(false), bs("0101"));
        assert_eq!(bs("01").concat(&bs("10")), bs("0110"));
        assert_eq!(bs("").concat(&bs("1")), bs("1"));
    }

    #[test]
    fn matches_and_contains() {
        let h = bs("1100101000");
        assert!(h.contains_naive(&bs("00101")));
        assert!(h.contains_naive(&bs("")));
        assert!(h.contains_naive(&h));
        assert!(!h.contains_naive(&bs("11011")));
        assert!(!h.contains_naive(&bs("11001010001")));
        assert!(h.starts_with(&bs("1100")));
        assert!(h.ends_with(&bs("1000")));
        assert!(!h.ends_with(&bs("1001")));
    }

    #[test]
    fn runs() {
        let h = bs("1100101000");
        assert_eq!(h.max_run(false), 3);
        assert_eq!(h.max_run(true), 2);
        assert_eq!(h.trailing_run(false), 3);
        assert_eq!(h.leading_run(true), 2);
        assert_eq!(bs("0000").max_run(false), 4);
        assert_eq!(bs("").max_run(false), 0);
    }

    #[test]
    fn zeros_ones_and_u64_mapping() {
        assert_eq!(BitString::zeros(3), bs("000"));
        assert_eq!(BitString::ones(3), bs("111"));
        assert_eq!(BitString::zeros(0), bs(""));
        let s = bs("1011");
        assert_eq!(BitString::from_u64(s.to_u64(), 4), s);
        // Position 0 is the lowest bit: "1011" -> 1 + 4 + 8.
        assert_eq!(s.to_u64(), 0b1101);
    }

    #[test]
    fn word_boundary_edges() {
        let mut s = BitString::zeros(63);
        s.push(true);
        s.push(true);
        assert_eq!(s.len(), 65);
        assert!(s.bit(63) && s.bit(64));
        assert_eq!(s.suffix(2), bs("11"));
        assert_eq!(s.slice(62, 3), bs("011"));
        let t = s.prepend(true);
        assert!(t.bit(0) && t.bit(64) && t.bit(65));
        assert_eq!(t.leading_run(true), 1);
        s.truncate(64);
        assert_eq!(s.trailing_run(true), 1);
        s.truncate(63);
        assert_eq!(s, BitString::zeros(63));
    }

    proptest! {
        #[test]
        fn prop_roundtrip(s in "[01]{0,200}") {
            let b = bs(&s);
            prop_assert_eq!(b.to_string(), s);
        }

        #[test]
        fn prop_slice_matches_text(s in "[01]{1,200}", a in 0usize..200, k in 0usize..200) {
            let b = bs(&s);
            let a = a % (b.len() + 1);
            let k = k % (b.len() - a + 1);
            prop_assert_eq!(b.slice(a, k).to_string(), &s[a..a + k]);
        }

        #[test]
        fn prop_contains_matches_str(h in "[01]{0,120}", p in "[01]{0,16}") {
            let res = bs(&h).contains_naive(&bs(&p));
            prop_assert_eq!(res, h.contains(&p));
        }

        #[test]
        fn prop_concat_assoc_with_text(a in "[01]{0,80}", b in "[01]{0,80}") {
            let joined = bs(&a).concat(&bs(&b));
            prop_assert_eq!(joined.to_string(), format!("{a}{b}"));
        }

        #[test]
        fn prop_reversed(s in "[01]{0,150}") {
            let r: String = s.chars().rev().collect();
            prop_assert_eq!(bs(&s).reversed(), bs(&r));
        }
    }
}
