//! Post-processing of bit streams: two-stream XOR, adjacent-pair XOR, and
//! the Von Neumann extractor.

use crate::bits::BitBuffer;
use crate::error::{Error, Result};

/// Bitwise XOR of two equal-length streams.
pub fn xor_streams(a: &BitBuffer, b: &BitBuffer) -> Result<BitBuffer> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let words = a.words().iter().zip(b.words()).map(|(x, y)| x ^ y).collect();
    Ok(BitBuffer::from_words(words, a.len()))
}

/// Gathers the even-position bits of `x` into the low 32 bits.
#[inline]
fn pack_even_bits(mut x: u64) -> u64 {
    x &= 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF
}

/// `out[j] = a[2j] ^ a[2j+1]`; a trailing odd bit is dropped.
pub fn xor_pairs(a: &BitBuffer) -> Result<BitBuffer> {
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    let out_len = a.len() / 2;
    let packed: Vec<u64> = a
        .words()
        .iter()
        .map(|&w| pack_even_bits(w ^ (w >> 1)))
        .collect();
    let words = packed
        .chunks(2)
        .map(|c| c[0] | c.get(1).map_or(0, |hi| hi << 32))
        .collect();
    Ok(BitBuffer::from_words(words, out_len))
}

/// Von Neumann extractor over non-overlapping pairs: `01 -> 0`, `10 -> 1`,
/// equal pairs emit nothing.
pub fn von_neumann(a: &BitBuffer) -> BitBuffer {
    let mut out = BitBuffer::with_capacity(a.len() / 4);
    let mut it = a.iter();
    while let (Some(x), Some(y)) = (it.next(), it.next()) {
        if x != y {
            out.push(x);
        }
    }
    out
}
