//! Digital twin of a triggered single-photon-detector quantum random number
//! generator.
//!
//! * [`sim`]: event-driven Monte Carlo of laser, detector, and strobe.
//! * [`analytic`]: closed-form bias/correlation model of the same device.
//! * [`extract`]: XOR and Von Neumann post-processing.
//! * [`stats`]: bias, serial correlation, SP800-22 subset, Markov oracle source.
//! * [`bitio`]: bit file formats, sweep CSV.

pub mod analytic;
pub mod bitio;
pub mod bits;
pub mod config;
pub mod error;
pub mod extract;
pub mod sim;
pub mod stats;

pub use analytic::{A1Prediction, SensitivityParam};
pub use bits::BitBuffer;
pub use config::{Config, DetectorParams, Preset, RunConfig, SourceParams};
pub use error::{Error, Result};
pub use sim::{CauseCounts, SimResult, SweepAxis, SweepOptions, SweepRow};
pub use stats::{LagEstimate, StatsReport, TestKind, TestOutcome};
