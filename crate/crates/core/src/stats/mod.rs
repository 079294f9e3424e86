//! Bias and serial-correlation estimators, a subset of SP800-22, and a
//! correlated Markov bit source used as ground truth.

mod markov;
mod nist;

pub use markov::{markov_source, MarkovSourceParams};
pub use nist::{block_frequency_test, monobit_test, runs_test, TestKind, TestOutcome, ALPHA};

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::BitBuffer;
use crate::error::{Error, Result};

/// `b = p̂ - 1/2` with its binomial standard error.
pub fn bias(bits: &BitBuffer) -> Result<(f64, f64)> {
    if bits.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let n = bits.len() as f64;
    let p = bits.count_ones() as f64 / n;
    Ok((p - 0.5, (p * (1.0 - p) / n).sqrt()))
}

/// One lag of the serial-correlation profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    pub lag: usize,
    pub a: f64,
    /// `1/sqrt(n - lag)`.
    pub err: f64,
}

/// `sum_{i < n-k} x_i·x_{i+k}` restricted to `i` in `[start, end)`.
fn count_pairs(bits: &BitBuffer, start: usize, end: usize, k: usize) -> u64 {
    debug_assert!(end + k <= bits.len());
    let mut total = 0u64;
    let mut i = start;
    while i < end {
        let take = (end - i).min(64);
        let mask = if take == 64 { !0 } else { (1u64 << take) - 1 };
        total += (bits.word_at(i) & bits.word_at(i + k) & mask).count_ones() as u64;
        i += take;
    }
    total
}

/// Ratio of the centred lag-`k` products to the centred squares, both
/// summed over the first `n-k` terms with the full-sequence mean.
///
/// Evaluated from integer counts: with `m = ones`, both sums scaled by
/// `n^2` are exact `i128`s, so the only rounding is the final division.
fn ratio_from_counts(n: u64, k: u64, ones: u64, head: u64, tail: u64, cross: u64) -> f64 {
    let (n, m, n_eff) = (n as i128, ones as i128, (n - k) as i128);
    let (head, tail, cross) = (head as i128, tail as i128, cross as i128);
    let num = n * n * cross - n * m * (head + tail) + n_eff * m * m;
    let den = head * (n * n - 2 * n * m) + n_eff * m * m;
    num as f64 / den as f64
}

/// Lag-`k` serial autocorrelation and its statistical error `1/sqrt(n-k)`.
pub fn autocorr(bits: &BitBuffer, k: usize) -> Result<(f64, f64)> {
    let n = bits.len();
    if k == 0 {
        return Err(crate::error::invalid("k", "lag must be >= 1"));
    }
    if n <= k {
        return Err(Error::TooShort { needed: k + 1, got: n });
    }
    let ones = bits.count_ones();
    if ones == 0 || ones == n as u64 {
        return Err(Error::ConstantInput);
    }
    let head = ones - bits.count_ones_range(n - k, n);
    let tail = ones - bits.count_ones_range(0, k);
    let cross = count_pairs(bits, 0, n - k, k);
    let a = ratio_from_counts(n as u64, k as u64, ones, head, tail, cross);
    Ok((a, 1.0 / ((n - k) as f64).sqrt()))
}

/// [`autocorr`] for every lag `1..=k_max`.
pub fn autocorr_profile(bits: &BitBuffer, k_max: usize) -> Result<Vec<LagEstimate>> {
    if bits.len() <= k_max {
        return Err(Error::TooShort { needed: k_max + 1, got: bits.len() });
    }
    (1..=k_max)
        .into_par_iter()
        .map(|k| autocorr(bits, k).map(|(a, err)| LagEstimate { lag: k, a, err }))
        .collect()
}

/// Streaming form of [`autocorr_profile`]: feed chunks of any size, get the
/// same integers, hence bit-identical results, as the one-shot call.
#[derive(Debug, Clone)]
pub struct AutocorrAccumulator {
    k_max: usize,
    n: u64,
    ones: u64,
    /// First `k_max` bits of the stream.
    prefix: BitBuffer,
    /// Last (up to) `k_max` bits seen.
    tail: BitBuffer,
    cross: Vec<u64>,
}

impl AutocorrAccumulator {
    pub fn new(k_max: usize) -> Self {
        Self {
            k_max,
            n: 0,
            ones: 0,
            prefix: BitBuffer::new(),
            tail: BitBuffer::new(),
            cross: vec![0; k_max],
        }
    }

    pub fn push_chunk(&mut self, chunk: &BitBuffer) {
        if chunk.is_empty() {
            return;
        }
        let mut joined = self.tail.clone();
        joined.extend_from(chunk);
        let carried = self.tail.len();
        for k in 1..=self.k_max {
            // Pairs whose later element falls in the new chunk.
            let start = carried.saturating_sub(k);
            let end = joined.len().saturating_sub(k);
            if end > start {
                self.cross[k - 1] += count_pairs(&joined, start, end, k);
            }
        }
        for bit in chunk.iter().take(self.k_max.saturating_sub(self.prefix.len())) {
            self.prefix.push(bit);
        }
        self.n += chunk.len() as u64;
        self.ones += chunk.count_ones();
        let keep = joined.len().min(self.k_max);
        self.tail = BitBuffer::from_bools(joined.iter().skip(joined.len() - keep));
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(&self) -> Result<Vec<LagEstimate>> {
        let n = self.n as usize;
        if n <= self.k_max {
            return Err(Error::TooShort { needed: self.k_max + 1, got: n });
        }
        if self.ones == 0 || self.ones == self.n {
            return Err(Error::ConstantInput);
        }
        let t = self.tail.len();
        (1..=self.k_max)
            .map(|k| {
                let head = self.ones - self.tail.count_ones_range(t - k, t);
                let tail = self.ones - self.prefix.count_ones_range(0, k);
                let a = ratio_from_counts(self.n, k as u64, self.ones, head, tail, self.cross[k - 1]);
                Ok(LagEstimate { lag: k, a, err: 1.0 / ((n - k) as f64).sqrt() })
            })
            .collect()
    }
}

/// Full analysis of one bit stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub n: usize,
    pub bias: f64,
    pub bias_err: f64,
    pub autocorr: Vec<LagEstimate>,
    pub tests: Vec<TestOutcome>,
}

impl StatsReport {
    /// Runs bias, the lag profile up to `k_max`, and the requested tests.
    /// A test that cannot run (too short, prerequisite) is reported as a
    /// failed outcome carrying the reason.
    pub fn analyze(bits: &BitBuffer, k_max: usize, tests: &[TestKind]) -> Result<StatsReport> {
        let (b, err) = bias(bits)?;
        let autocorr = if k_max > 0 {
            autocorr_profile(bits, k_max)?
        } else {
            Vec::new()
        };
        let tests = tests.iter().map(|t| t.run(bits)).collect();
        Ok(StatsReport {
            n: bits.len(),
            bias: b,
            bias_err: err,
            autocorr,
            tests,
        })
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n          {}", self.n);
        let _ = writeln!(s, "bias       {:+.6e} ± {:.3e}", self.bias, self.bias_err);
        if !self.autocorr.is_empty() {
            let _ = writeln!(s, "\n{:>5}  {:>14}  {:>11}  {:>7}", "lag", "a_k", "err", "a/err");
            for l in &self.autocorr {
                let _ = writeln!(s, "{:>5}  {:>+14.6e}  {:>11.3e}  {:>+7.2}", l.lag, l.a, l.err, l.a / l.err);
            }
        }
        if !self.tests.is_empty() {
            let _ = writeln!(s, "\n{:<16}  {:>12}  {:>10}  verdict", "test", "statistic", "p-value");
            for t in &self.tests {
                let _ = writeln!(
                    s,
                    "{:<16}  {:>12.6}  {:>10.6}  {}{}",
                    t.name,
                    t.statistic,
                    t.p_value,
                    t.verdict(),
                    t.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
                );
            }
        }
        s
    }

    /// `test,statistic,p_value,verdict` rows.
    pub fn render_csv(&self) -> String {
        let mut s = String::from("test,statistic,p_value,verdict\n");
        for t in &self.tests {
            let _ = writeln!(s, "{},{:e},{:e},{}", t.name, t.statistic, t.p_value, t.verdict());
        }
        s
    }
}
