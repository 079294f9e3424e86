use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bits::BitBuffer;
use crate::error::{invalid, Result};

/// Target stationary bias and lag-1 correlation of a two-state chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovSourceParams {
    pub bias: f64,
    pub a1: f64,
}

impl MarkovSourceParams {
    /// `(P(1|0), P(1|1))`.
    pub fn transitions(&self) -> Result<(f64, f64)> {
        let p = 0.5 + self.bias;
        let p11 = p + self.a1 * (1.0 - p);
        let p10 = p * (1.0 - self.a1);
        for (name, v) in [("p", p), ("P(1|1)", p11), ("P(1|0)", p10)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(
                    "markov",
                    format!("{name} = {v} outside [0, 1] for bias {} and a1 {}", self.bias, self.a1),
                ));
            }
        }
        Ok((p10, p11))
    }
}

/// Bernoulli threshold on a raw 64-bit draw: `draw < thr` with probability `p`.
fn threshold(p: f64) -> u128 {
    (p * 18_446_744_073_709_551_616.0) as u128
}

/// Stationary chain with `P(1|1) = p + a1·(1-p)`, `P(1|0) = p·(1-a1)`,
/// `p = 1/2 + bias`. Its lag-k correlation is `a1^k`.
pub fn markov_source(params: MarkovSourceParams, n: usize, seed: u64) -> Result<BitBuffer> {
    let (p10, p11) = params.transitions()?;
    let thr = [threshold(p10), threshold(p11)];
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut words = Vec::with_capacity(n.div_ceil(64));
    let mut prev = u128::from(rng.next_u64()) < threshold(0.5 + params.bias);
    let mut acc = 0u64;
    for i in 0..n {
        let bit = if i == 0 {
            prev
        } else {
            u128::from(rng.next_u64()) < thr[prev as usize]
        };
        acc |= (bit as u64) << (i % 64);
        if i % 64 == 63 {
            words.push(acc);
            acc = 0;
        }
        prev = bit;
    }
    if n % 64 != 0 {
        words.push(acc);
    }
    Ok(BitBuffer::from_words(words, n))
}
