//! Frequency, block-frequency and runs tests as defined in NIST SP800-22.
//! The remaining tests of the suite are run externally on `sts_raw` exports.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bits::BitBuffer;
use crate::error::{invalid, Error, Result};

/// Significance level used for pass/fail verdicts.
pub const ALPHA: f64 = 0.01;

/// Minimum sequence length for monobit and runs.
pub const MIN_BITS: usize = 100;

/// Default block length for the block-frequency test.
pub const DEFAULT_BLOCK: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
    /// Why the test could not be evaluated, if it could not.
    pub note: Option<String>,
}

impl TestOutcome {
    fn new(name: &'static str, statistic: f64, p_value: f64) -> Self {
        Self {
            name,
            statistic,
            p_value,
            passed: p_value >= ALPHA,
            note: None,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.note.is_some() {
            "n/a"
        } else if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Monobit,
    BlockFrequency { block: usize },
    Runs,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [
        TestKind::Monobit,
        TestKind::BlockFrequency { block: DEFAULT_BLOCK },
        TestKind::Runs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Monobit => "monobit",
            TestKind::BlockFrequency { .. } => "block_frequency",
            TestKind::Runs => "runs",
        }
    }

    /// Runs the test; inapplicable inputs yield a non-passing outcome with a note.
    pub fn run(self, bits: &BitBuffer) -> TestOutcome {
        let res = match self {
            TestKind::Monobit => monobit_test(bits),
            TestKind::BlockFrequency { block } => block_frequency_test(bits, block),
            TestKind::Runs => runs_test(bits),
        };
        res.unwrap_or_else(|e| TestOutcome {
            name: self.name(),
            statistic: f64::NAN,
            p_value: f64::NAN,
            passed: false,
            note: Some(e.to_string()),
        })
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monobit" | "frequency" => Ok(TestKind::Monobit),
            "runs" => Ok(TestKind::Runs),
            "block_frequency" | "block-frequency" | "blockfreq" => {
                Ok(TestKind::BlockFrequency { block: DEFAULT_BLOCK })
            }
            other => {
                let block = other
                    .strip_prefix("block_frequency:")
                    .or_else(|| other.strip_prefix("block-frequency:"))
                    .and_then(|m| m.parse().ok())
                    .ok_or_else(|| invalid("tests", format!("unknown test `{other}`")))?;
                Ok(TestKind::BlockFrequency { block })
            }
        }
    }
}

pub(crate) fn monobit_unchecked(bits: &BitBuffer) -> TestOutcome {
    let n = bits.len() as f64;
    let s_n = 2.0 * bits.count_ones() as f64 - n;
    let s_obs = s_n.abs() / n.sqrt();
    TestOutcome::new("monobit", s_obs, erfc(s_obs / std::f64::consts::SQRT_2))
}

pub fn monobit_test(bits: &BitBuffer) -> Result<TestOutcome> {
    if bits.len() < MIN_BITS {
        return Err(Error::TooShort { needed: MIN_BITS, got: bits.len() });
    }
    Ok(monobit_unchecked(bits))
}

pub(crate) fn block_frequency_unchecked(bits: &BitBuffer, block: usize) -> TestOutcome {
    let blocks = bits.len() / block;
    let chi2 = 4.0
        * block as f64
        * (0..blocks)
            .map(|j| {
                let pi = bits.count_ones_range(j * block, (j + 1) * block) as f64 / block as f64;
                (pi - 0.5) * (pi - 0.5)
            })
            .sum::<f64>();
    // the upper incomplete gamma is 1 at x = 0, which statrs rejects
    let p = if chi2 > 0.0 { gamma_ur(blocks as f64 / 2.0, chi2 / 2.0) } else { 1.0 };
    TestOutcome::new("block_frequency", chi2, p)
}

pub fn block_frequency_test(bits: &BitBuffer, block: usize) -> Result<TestOutcome> {
    if block < 2 {
        return Err(invalid("block", format!("block length must be >= 2, got {block}")));
    }
    if bits.len() < block {
        return Err(Error::TooShort { needed: block, got: bits.len() });
    }
    Ok(block_frequency_unchecked(bits, block))
}

fn transitions(bits: &BitBuffer) -> u64 {
    let n = bits.len();
    let mut total = 0u64;
    let mut i = 0;
    while i + 1 < n {
        let take = (n - 1 - i).min(64);
        let mask = if take == 64 { !0 } else { (1u64 << take) - 1 };
        total += ((bits.word_at(i) ^ bits.word_at(i + 1)) & mask).count_ones() as u64;
        i += take;
    }
    total
}

pub(crate) fn runs_unchecked(bits: &BitBuffer) -> Result<TestOutcome> {
    let n = bits.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    let threshold = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= threshold {
        return Err(Error::RunsPrerequisite {
            deviation: (pi - 0.5).abs(),
            threshold,
        });
    }
    let v_obs = 1.0 + transitions(bits) as f64;
    let q = pi * (1.0 - pi);
    let p = erfc((v_obs - 2.0 * n * q).abs() / (2.0 * (2.0 * n).sqrt() * q));
    Ok(TestOutcome::new("runs", v_obs, p))
}

pub fn runs_test(bits: &BitBuffer) -> Result<TestOutcome> {
    if bits.len() < MIN_BITS {
        return Err(Error::TooShort { needed: MIN_BITS, got: bits.len() });
    }
    runs_unchecked(bits)
}
