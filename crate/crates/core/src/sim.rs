//! Event-driven Monte Carlo of the trigger → laser → detector → strobe chain.
//!
//! Each trigger `n` at `t_n = n·T` may produce one photon detection
//! candidate at `t_n + delay + jitter`. Dark counts arrive as a Poisson
//! process. An accepted candidate (detector not dead) raises the output for
//! `tau_pd`, blinds the detector for `tau_dead`, and may schedule one
//! afterpulse candidate an `Exp(tau_a)` delay later. Bit `n` is the output
//! level at the strobe `t_n + delay + delta_t`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::analytic::{mean_photons_for_p1, predict_a1, predict_p1};
use crate::bits::BitBuffer;
use crate::config::{fwhm_to_sigma, Config, DetectorParams, RunConfig, SourceParams};
use crate::error::{invalid, Error, Result};
use crate::stats::{autocorr, bias};

/// Jitter samples are truncated at this many standard deviations so that
/// photon candidates can be generated a bounded time ahead of the clock.
const JITTER_TRUNCATION: f64 = 8.0;

/// What produced an accepted detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cause {
    Photon { trigger: u64 },
    Afterpulse,
    Dark,
}

/// Accepted detection, for event-log inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub time: f64,
    pub cause: Cause,
}

/// Tally of detection causes over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CauseCounts {
    pub photon: u64,
    pub afterpulse: u64,
    pub dark: u64,
    /// Candidates of any kind discarded because the detector was dead.
    pub suppressed: u64,
    /// Accepted photon detections whose output pulse missed their own strobe.
    pub strobe_miss: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// One bit per trigger, in trigger order.
    pub bits: BitBuffer,
    pub counts: CauseCounts,
    pub p1_hat: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    time: f64,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Photon(u64),
    Afterpulse,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

struct Detector<'a> {
    det: &'a DetectorParams,
    chains: bool,
    afterpulse_delay: Option<Exp<f64>>,
    dead_until: f64,
    pulse_end: f64,
    counts: CauseCounts,
}

impl Detector<'_> {
    /// Offers a candidate; returns whether it was accepted.
    fn offer<R: Rng>(
        &mut self,
        time: f64,
        cause: Cause,
        rng: &mut R,
        pending: &mut BinaryHeap<Reverse<Candidate>>,
        strobe_of: impl Fn(u64) -> f64,
    ) -> bool {
        if time < self.dead_until {
            self.counts.suppressed += 1;
            return false;
        }
        self.dead_until = time + self.det.tau_dead;
        let end = time + self.det.tau_pd;
        self.pulse_end = self.pulse_end.max(end);
        let may_spawn = match cause {
            Cause::Photon { trigger } => {
                self.counts.photon += 1;
                let s = strobe_of(trigger);
                if !(time <= s && s <= end) {
                    self.counts.strobe_miss += 1;
                }
                true
            }
            Cause::Dark => {
                self.counts.dark += 1;
                true
            }
            Cause::Afterpulse => {
                self.counts.afterpulse += 1;
                self.chains
            }
        };
        if let (true, Some(delay)) = (may_spawn, self.afterpulse_delay) {
            if rng.gen::<f64>() < self.det.p_after {
                pending.push(Reverse(Candidate {
                    time: time + delay.sample(rng),
                    kind: Kind::Afterpulse,
                }));
            }
        }
        true
    }
}

/// Runs the simulation. Deterministic in `run.seed`.
pub fn simulate(det: &DetectorParams, src: &SourceParams, run: &RunConfig) -> Result<SimResult> {
    run_inner(det, src, run, |_| {})
}

/// [`simulate`] that also returns every accepted detection in time order.
pub fn simulate_traced(
    det: &DetectorParams,
    src: &SourceParams,
    run: &RunConfig,
) -> Result<(SimResult, Vec<Detection>)> {
    let mut log = Vec::new();
    let res = run_inner(det, src, run, |d| log.push(d))?;
    Ok((res, log))
}

fn run_inner(
    det: &DetectorParams,
    src: &SourceParams,
    run: &RunConfig,
    mut on_detect: impl FnMut(Detection),
) -> Result<SimResult> {
    Config { detector: *det, source: *src, run: *run }.validate()?;

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(run.seed);
    let n = run.n_triggers;
    let period = run.period;
    let p_photon = predict_p1(src.mean_photons, det.efficiency)?;
    let sigma = fwhm_to_sigma(src.jitter_fwhm).hypot(fwhm_to_sigma(det.jitter_fwhm));
    let jitter_bound = JITTER_TRUNCATION * sigma;
    let strobe_of = |m: u64| m as f64 * period + det.delay + run.delta_t;

    let dark_gap = (det.dark_rate > 0.0).then(|| Exp::new(det.dark_rate * 1e-9).expect("positive rate"));
    let mut next_dark = dark_gap.map_or(f64::INFINITY, |d| d.sample(&mut rng));

    let mut detector = Detector {
        det,
        chains: run.allow_afterpulse_chains,
        afterpulse_delay: (det.p_after > 0.0).then(|| Exp::new(1.0 / det.tau_a).expect("tau_a > 0")),
        dead_until: f64::NEG_INFINITY,
        pulse_end: f64::NEG_INFINITY,
        counts: CauseCounts::default(),
    };
    let mut pending: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();
    let mut next_trigger = 0u64;

    let mut words = Vec::with_capacity((n as usize).div_ceil(64));
    let mut acc = 0u64;
    let mut ones = 0u64;

    for i in 0..n {
        let strobe = strobe_of(i);
        // Every trigger whose candidate could precede this strobe is queued.
        while next_trigger < n && next_trigger as f64 * period + det.delay - jitter_bound <= strobe {
            if rng.gen::<f64>() < p_photon {
                let jitter = if sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (z * sigma).clamp(-jitter_bound, jitter_bound)
                } else {
                    0.0
                };
                pending.push(Reverse(Candidate {
                    time: next_trigger as f64 * period + det.delay + jitter,
                    kind: Kind::Photon(next_trigger),
                }));
            }
            next_trigger += 1;
        }

        loop {
            let queued = pending.peek().map_or(f64::INFINITY, |c| c.0.time);
            let (time, cause) = if next_dark <= queued {
                if next_dark > strobe {
                    break;
                }
                let t = next_dark;
                next_dark += dark_gap.map_or(f64::INFINITY, |d| d.sample(&mut rng));
                (t, Cause::Dark)
            } else {
                if queued > strobe {
                    break;
                }
                let c = pending.pop().expect("peeked").0;
                let cause = match c.kind {
                    Kind::Photon(m) => Cause::Photon { trigger: m },
                    Kind::Afterpulse => Cause::Afterpulse,
                };
                (c.time, cause)
            };
            if detector.offer(time, cause, &mut rng, &mut pending, strobe_of) {
                on_detect(Detection { time, cause });
            }
        }

        let bit = detector.pulse_end >= strobe;
        ones += bit as u64;
        acc |= (bit as u64) << (i % 64);
        if i % 64 == 63 {
            words.push(acc);
            acc = 0;
        }
    }
    if n % 64 != 0 {
        words.push(acc);
    }

    Ok(SimResult {
        bits: BitBuffer::from_words(words, n as usize),
        counts: detector.counts,
        p1_hat: ones as f64 / n as f64,
    })
}

/// Derives the seed for stream `index` of a master seed: the SplitMix64
/// output for state `master + (index + 1)·0x9E3779B97F4A7C15`. Results do
/// not depend on the order in which streams are consumed.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream index reserved for intensity calibration runs.
const CALIBRATION_STREAM: u64 = u64::MAX;

/// Calibration run length whose standard error is at most `tol / 3`.
pub fn calibration_length(target_p1: f64, tol: f64) -> u64 {
    (9.0 * target_p1 * (1.0 - target_p1) / (tol * tol)).ceil() as u64
}

const MAX_BISECTIONS: usize = 60;

/// Finds the mean photon number whose calibration run lands within `tol`
/// of `target_p1`, by bisection on `mean_photons`. All calibration runs
/// share one seed derived from `run.seed`, so the measured `p1` is a
/// deterministic function of `mean_photons`.
pub fn tune_intensity(
    det: &DetectorParams,
    src: &SourceParams,
    run: &RunConfig,
    target_p1: f64,
    tol: f64,
) -> Result<f64> {
    if !(target_p1 > 0.0 && target_p1 < 1.0) {
        return Err(invalid("target_p1", format!("target must be in (0, 1), got {target_p1}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    let cal_run = RunConfig {
        n_triggers: calibration_length(target_p1, tol),
        seed: child_seed(run.seed, CALIBRATION_STREAM),
        ..*run
    };
    let measure = |mu: f64| -> Result<f64> {
        let src = SourceParams { mean_photons: mu, ..*src };
        Ok(simulate(det, &src, &cal_run)?.p1_hat - target_p1)
    };

    let guess = mean_photons_for_p1(target_p1, det.efficiency)?;
    let f0 = measure(guess)?;
    if f0.abs() <= tol {
        return Ok(guess);
    }

    // Bracket the root, stepping away from the guess geometrically.
    let (mut lo, mut hi) = (guess, guess);
    let mut step = 0.02 * guess;
    let mut bracketed = false;
    for _ in 0..40 {
        if f0 < 0.0 {
            lo = hi;
            hi += step;
            let f = measure(hi)?;
            if f.abs() <= tol {
                return Ok(hi);
            }
            bracketed = f > 0.0;
        } else {
            hi = lo;
            lo = (lo - step).max(0.0);
            let f = measure(lo)?;
            if f.abs() <= tol {
                return Ok(lo);
            }
            bracketed = f < 0.0 || lo == 0.0;
        }
        if bracketed {
            break;
        }
        step *= 2.0;
    }
    if !bracketed {
        return Err(Error::TuningFailed { lo, hi });
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = measure(mid)?;
        if f.abs() <= tol {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::TuningFailed { lo, hi })
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Trigger rate in MHz.
    Rate,
    /// Detector pulse width in ns.
    TauPd,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate" => Ok(SweepAxis::Rate),
            "tau-pd" | "tau_pd" => Ok(SweepAxis::TauPd),
            other => Err(invalid("axis", format!("unknown sweep axis `{other}` (rate, tau-pd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub target_p1: f64,
    pub tune_tol: f64,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            target_p1: 0.5,
            tune_tol: 5e-4,
            parallel: false,
        }
    }
}

/// One grid point: measured and predicted lag-1 correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub n: u64,
    pub p1_hat: f64,
    pub bias: f64,
    pub a1_hat: f64,
    pub a1_err: f64,
    pub a1_pred: f64,
    pub truncated: bool,
    /// Set when the point could not be evaluated; numeric fields are NaN.
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(axis_value: f64, n: u64, err: Error) -> Self {
        SweepRow {
            axis_value,
            n,
            p1_hat: f64::NAN,
            bias: f64::NAN,
            a1_hat: f64::NAN,
            a1_err: f64::NAN,
            a1_pred: f64::NAN,
            truncated: false,
            error: Some(err.to_string()),
        }
    }
}

/// Simulates one grid point: re-tune the intensity, run, estimate `a1`.
pub fn sweep_point(
    det: &DetectorParams,
    src: &SourceParams,
    run: &RunConfig,
    axis: SweepAxis,
    value: f64,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let (mut det, mut run) = (*det, *run);
    match axis {
        SweepAxis::Rate => run.period = crate::config::rate_to_period(value * 1e6)?,
        SweepAxis::TauPd => det.tau_pd = value,
    }
    Config { detector: det, source: *src, run }.validate()?;
    let mu = tune_intensity(&det, src, &run, opts.target_p1, opts.tune_tol)?;
    let src = SourceParams { mean_photons: mu, ..*src };
    let res = simulate(&det, &src, &run)?;
    let (b, _) = bias(&res.bits)?;
    let (a1_hat, a1_err) = autocorr(&res.bits, 1)?;
    let pred = predict_a1(&det, run.period, run.delta_t);
    Ok(SweepRow {
        axis_value: value,
        n: run.n_triggers,
        p1_hat: res.p1_hat,
        bias: b,
        a1_hat,
        a1_err,
        a1_pred: pred.a1,
        truncated: pred.truncated,
        error: None,
    })
}

/// Evaluates every grid point, point `i` seeded with `child_seed(run.seed, i)`.
/// Failures are recorded in their row and the sweep continues.
pub fn sweep(
    det: &DetectorParams,
    src: &SourceParams,
    run: &RunConfig,
    axis: SweepAxis,
    grid: &[f64],
    opts: &SweepOptions,
) -> Vec<SweepRow> {
    let point = |(i, &value): (usize, &f64)| {
        let run = RunConfig { seed: child_seed(run.seed, i as u64), ..*run };
        sweep_point(det, src, &run, axis, value, opts)
            .unwrap_or_else(|e| SweepRow::failed(value, run.n_triggers, e))
    };
    if opts.parallel {
        grid.par_iter().enumerate().map(point).collect()
    } else {
        grid.iter().enumerate().map(point).collect()
    }
}
