//! Exact-length packed bit sequence.
//!
//! Bit `i` lives in word `i / 64` at bit position `i % 64` (LSB of each
//! word is the earliest bit). All bits past `len` in the last word are zero.

use std::fmt;

#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitBuffer {
    words: Vec<u64>,
    len: usize,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Builds from words with the given exact length; stray high bits are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut b = Self { words, len };
        b.clear_tail();
        b
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(it: I) -> Self {
        let it = it.into_iter();
        let mut b = Self::with_capacity(it.size_hint().0);
        for bit in it {
            b.push(bit);
        }
        b
    }

    /// Parses a strict string of `'0'`/`'1'` characters. Returns `None` on
    /// any other character.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        let mut b = Self::with_capacity(s.len());
        for c in s.bytes() {
            match c {
                b'0' => b.push(false),
                b'1' => b.push(true),
                _ => return None,
            }
        }
        Some(b)
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
    pub fn push(&mut self, bit: bool) {
        let (w, b) = (self.len / 64, self.len % 64);
        if b == 0 {
            self.words.push(0);
        }
        self.words[w] |= (bit as u64) << b;
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of ones among bits `[start, end)`.
    pub fn count_ones_range(&self, start: usize, end: usize) -> u64 {
        assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let (ws, we) = (start / 64, (end - 1) / 64);
        let lo_mask = !0u64 << (start % 64);
        let hi_mask = !0u64 >> (63 - (end - 1) % 64);
        if ws == we {
            return (self.words[ws] & lo_mask & hi_mask).count_ones() as u64;
        }
        let mut n = (self.words[ws] & lo_mask).count_ones() as u64;
        n += self.words[ws + 1..we]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum::<u64>();
        n + (self.words[we] & hi_mask).count_ones() as u64
    }

    /// 64 bits starting at bit `i`; bits past the end read as zero.
    #[inline]
    pub(crate) fn word_at(&self, i: usize) -> u64 {
        let (w, b) = (i / 64, i % 64);
        let lo = self.words.get(w).copied().unwrap_or(0) >> b;
        if b == 0 {
            lo
        } else {
            lo | self.words.get(w + 1).copied().unwrap_or(0) << (64 - b)
        }
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { buf: self, pos: 0 }
    }

    pub fn extend_from(&mut self, other: &BitBuffer) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    fn clear_tail(&mut self) {
        if self.len % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }
}

pub struct Iter<'a> {
    buf: &'a BitBuffer,
    pos: usize,
}

impl Iterator for Iter<'_> {
    type Item = bool;

    #[inline]
    fn next(&mut self) -> Option<bool> {
        if self.pos >= self.buf.len {
            return None;
        }
        let bit = (self.buf.words[self.pos / 64] >> (self.pos % 64)) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.buf.len - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter<'_> {}

impl FromIterator<bool> for BitBuffer {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bools(iter)
    }
}

impl fmt::Debug for BitBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOW: usize = 64;
        write!(f, "BitBuffer[{}; ", self.len)?;
        for b in self.iter().take(SHOW) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > SHOW {
            f.write_str("...")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn push_get_roundtrip() {
        let b = BitBuffer::from_bit_str("1011000").unwrap();
        assert_eq!(b.len(), 7);
        assert!(b.get(0) && !b.get(1) && b.get(2) && b.get(3) && !b.get(6));
        assert_eq!(b.count_ones(), 3);
    }

    #[test]
    fn from_words_clears_tail() {
        let b = BitBuffer::from_words(vec![!0u64], 3);
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.words(), &[0b111]);
    }

    #[test]
    fn bad_char_rejected() {
        assert!(BitBuffer::from_bit_str("01a").is_none());
    }

    proptest! {
        #[test]
        fn range_count_and_word_at_match_naive(bits in proptest::collection::vec(any::<bool>(), 0..300),
                                              a in 0usize..300, b in 0usize..300) {
            let buf = BitBuffer::from_bools(bits.iter().copied());
            let (lo, hi) = (a.min(b).min(bits.len()), a.max(b).min(bits.len()));
            let naive = bits[lo..hi].iter().filter(|&&x| x).count() as u64;
            prop_assert_eq!(buf.count_ones_range(lo, hi), naive);
            let w = buf.word_at(lo);
            for j in 0..64 {
                let expect = bits.get(lo + j).copied().unwrap_or(false);
                prop_assert_eq!((w >> j) & 1 == 1, expect);
            }
        }
    }
}
