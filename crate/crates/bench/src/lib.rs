//! Shared inputs for the throughput benchmarks.

use strobe_core::stats::{markov_source, MarkovSourceParams};
use strobe_core::{BitBuffer, Config};

/// Fair uncorrelated stream of `n` bits.
pub fn fair_bits(n: usize, seed: u64) -> BitBuffer {
    markov_source(MarkovSourceParams { bias: 0.0, a1: 0.0 }, n, seed).expect("valid params")
}

/// Default device at 10 MHz with `n` triggers.
pub fn device(n: u64) -> Config {
    let mut cfg = Config::default();
    cfg.run.n_triggers = n;
    cfg
}
