//! Device and run parameters, presets, validation, and the flat
//! `key = value` config text format.
//!
//! All durations are real-valued nanoseconds. Rates are counts per second.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

/// `FWHM = 2·sqrt(2·ln 2)·sigma` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / FWHM_PER_SIGMA
}

/// Single-photon detector characteristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Output pulse width, ns.
    pub tau_pd: f64,
    /// Dead time after any accepted detection, ns.
    pub tau_dead: f64,
    /// Afterpulse exponential time constant, ns.
    pub tau_a: f64,
    /// Total afterpulsing probability.
    pub p_after: f64,
    /// Dark count rate, counts per second.
    pub dark_rate: f64,
    /// Per-photon detection efficiency.
    pub efficiency: f64,
    /// Trigger-to-output propagation delay, ns.
    pub delay: f64,
    /// Gaussian FWHM of the output timing, ns.
    pub jitter_fwhm: f64,
}

/// Pulsed laser characteristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Poisson mean photon number per pulse.
    pub mean_photons: f64,
    /// Pulse timing FWHM, ns.
    pub jitter_fwhm: f64,
}

/// Everything needed to reproduce one simulation run besides the device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Trigger period T, ns.
    pub period: f64,
    /// Strobe margin after the nominal detector output, ns.
    pub delta_t: f64,
    /// Number of triggers (= bits) requested.
    pub n_triggers: u64,
    pub seed: u64,
    /// Let afterpulse-caused detections spawn further afterpulses.
    pub allow_afterpulse_chains: bool,
}

/// Complete configuration for one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub detector: DetectorParams,
    pub source: SourceParams,
    pub run: RunConfig,
}

impl DetectorParams {
    /// Characterised reference detector, pulse width set to 21 ns.
    pub const PAPER: DetectorParams = DetectorParams {
        tau_pd: 21.0,
        tau_dead: 22.0,
        tau_a: 33.0,
        p_after: 0.047,
        dark_rate: 235.0,
        efficiency: 0.65,
        delay: 6.5,
        jitter_fwhm: 0.37,
    };

    /// No afterpulsing, no dark counts, no jitter, unit efficiency.
    pub const IDEAL: DetectorParams = DetectorParams {
        tau_pd: 21.0,
        tau_dead: 22.0,
        tau_a: 33.0,
        p_after: 0.0,
        dark_rate: 0.0,
        efficiency: 1.0,
        delay: 6.5,
        jitter_fwhm: 0.0,
    };

    pub fn with_tau_pd(mut self, tau_pd: f64) -> Self {
        self.tau_pd = tau_pd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("tau_pd", self.tau_pd)?;
        non_negative("tau_dead", self.tau_dead)?;
        if !(self.tau_a.is_finite() && self.tau_a > 0.0) {
            return Err(invalid("tau_a", "tau_a must be positive"));
        }
        probability("p_after", self.p_after)?;
        non_negative("dark_rate", self.dark_rate)?;
        probability("efficiency", self.efficiency)?;
        non_negative("delay", self.delay)?;
        non_negative("detector_jitter", self.jitter_fwhm)
    }
}

impl SourceParams {
    pub const PAPER: SourceParams = SourceParams {
        // ln 2 / 0.65: puts p1 at 1/2 for this detector before dead-time effects.
        mean_photons: std::f64::consts::LN_2 / 0.65,
        jitter_fwhm: 0.19,
    };

    pub fn validate(&self) -> Result<()> {
        non_negative("mean_photons", self.mean_photons)?;
        non_negative("laser_jitter", self.jitter_fwhm)
    }
}

impl RunConfig {
    pub const PAPER: RunConfig = RunConfig {
        period: 100.0,
        delta_t: 2.0,
        n_triggers: 1_000_000,
        seed: 1,
        allow_afterpulse_chains: false,
    };

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = period;
        self
    }

    pub fn with_triggers(mut self, n: u64) -> Self {
        self.n_triggers = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(invalid("period", "period must be positive"));
        }
        non_negative("delta_t", self.delta_t)?;
        if self.n_triggers == 0 {
            return Err(invalid("n_triggers", "n_triggers must be at least 1"));
        }
        Ok(())
    }
}

impl Default for Config {
    fn default() -> Self {
        Config::PAPER
    }
}

/// Named parameter sets selectable with `--preset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Ideal,
}

impl Preset {
    pub fn config(self) -> Config {
        match self {
            Preset::Paper => Config::PAPER,
            Preset::Ideal => Config {
                detector: DetectorParams::IDEAL,
                source: SourceParams {
                    mean_photons: std::f64::consts::LN_2,
                    jitter_fwhm: 0.0,
                },
                run: RunConfig::PAPER,
            },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "ideal" => Ok(Preset::Ideal),
            other => Err(invalid("preset", format!("unknown preset `{other}` (paper, ideal)"))),
        }
    }
}

impl Config {
    pub const PAPER: Config = Config {
        detector: DetectorParams::PAPER,
        source: SourceParams::PAPER,
        run: RunConfig::PAPER,
    };

    /// Checks every invariant and returns the config unchanged, or the first
    /// violation with its field name.
    pub fn validate(self) -> Result<Config> {
        self.detector.validate()?;
        self.source.validate()?;
        self.run.validate()?;
        Ok(self)
    }

    /// Parses config text on top of the built-in defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines over `self`. Unknown keys are errors.
    /// Setting both `period` and `rate` in one text is an error.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut saw_period = false;
        let mut saw_rate = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "period" => saw_period = true,
                "rate" => saw_rate = true,
                _ => {}
            }
            if saw_period && saw_rate {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "both `period` and `rate` given".into(),
                });
            }
            self.set(key, value).map_err(|e| match e {
                Error::UnknownKey(_) => e,
                other => Error::Parse {
                    line: line_no,
                    reason: other.to_string(),
                },
            })?;
        }
        Ok(())
    }

    /// Sets one field from its textual value, accepting unit suffixes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let d = &mut self.detector;
        match key {
            "tau_pd" => d.tau_pd = parse_duration(value)?,
            "tau_dead" => d.tau_dead = parse_duration(value)?,
            "tau_a" => d.tau_a = parse_duration(value)?,
            "p_after" => d.p_after = parse_real(value)?,
            "dark_rate" => d.dark_rate = parse_rate(value)?,
            "efficiency" => d.efficiency = parse_real(value)?,
            "delay" => d.delay = parse_duration(value)?,
            "detector_jitter" => d.jitter_fwhm = parse_duration(value)?,
            "mean_photons" => self.source.mean_photons = parse_real(value)?,
            "laser_jitter" => self.source.jitter_fwhm = parse_duration(value)?,
            "period" => self.run.period = parse_duration(value)?,
            "rate" => self.run.period = rate_to_period(parse_rate(value)?)?,
            "delta_t" => self.run.delta_t = parse_duration(value)?,
            "n_triggers" => self.run.n_triggers = parse_count(value)?,
            "seed" => self.run.seed = parse_count(value)?,
            "allow_afterpulse_chains" => self.run.allow_afterpulse_chains = parse_bool(value)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Renders every field in canonical units. `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        let d = &self.detector;
        let mut s = String::new();
        let _ = writeln!(s, "# detector");
        let _ = writeln!(s, "tau_pd = {} ns", d.tau_pd);
        let _ = writeln!(s, "tau_dead = {} ns", d.tau_dead);
        let _ = writeln!(s, "tau_a = {} ns", d.tau_a);
        let _ = writeln!(s, "p_after = {}", d.p_after);
        let _ = writeln!(s, "dark_rate = {} cps", d.dark_rate);
        let _ = writeln!(s, "efficiency = {}", d.efficiency);
        let _ = writeln!(s, "delay = {} ns", d.delay);
        let _ = writeln!(s, "detector_jitter = {} ns", d.jitter_fwhm);
        let _ = writeln!(s, "# source");
        let _ = writeln!(s, "mean_photons = {}", self.source.mean_photons);
        let _ = writeln!(s, "laser_jitter = {} ns", self.source.jitter_fwhm);
        let _ = writeln!(s, "# run");
        let _ = writeln!(s, "period = {} ns", self.run.period);
        let _ = writeln!(s, "delta_t = {} ns", self.run.delta_t);
        let _ = writeln!(s, "n_triggers = {}", self.run.n_triggers);
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(
            s,
            "allow_afterpulse_chains = {}",
            self.run.allow_afterpulse_chains
        );
        s
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{field} must be finite and >= 0, got {v}")))
    }
}

fn probability(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("probability out of range: {v}")))
    }
}

fn split_suffix(s: &str) -> (&str, &str) {
    let s = s.trim();
    let cut = s
        .rfind(|c: char| c.is_ascii_digit() || c == '.')
        .map_or(0, |i| i + 1);
    (s[..cut].trim(), s[cut..].trim())
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid("value", format!("not a number: `{s}`")))
}

/// Duration in nanoseconds; accepts `ps`, `ns`, `us` suffixes (bare = ns).
pub fn parse_duration(s: &str) -> Result<f64> {
    let (num, unit) = split_suffix(s);
    let scale = match unit {
        "" | "ns" => 1.0,
        "ps" => 1e-3,
        "us" => 1e3,
        other => return Err(invalid("value", format!("unknown duration unit `{other}`"))),
    };
    Ok(parse_real(num)? * scale)
}

/// Rate in counts per second; accepts `cps`, `Hz`, `kHz`, `MHz` (bare = cps).
pub fn parse_rate(s: &str) -> Result<f64> {
    let (num, unit) = split_suffix(s);
    let scale = match unit {
        "" | "cps" | "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        other => return Err(invalid("value", format!("unknown rate unit `{other}`"))),
    };
    Ok(parse_real(num)? * scale)
}

/// Trigger period in ns for a rate in Hz.
pub fn rate_to_period(rate_hz: f64) -> Result<f64> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(invalid("rate", format!("rate must be positive, got {rate_hz}")));
    }
    Ok(1e9 / rate_hz)
}

/// Non-negative integer; scientific notation such as `1e7` is accepted when exact.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f = parse_real(s)?;
    if f >= 0.0 && f.fract() == 0.0 && f <= u64::MAX as f64 {
        Ok(f as u64)
    } else {
        Err(invalid("value", format!("not a non-negative integer: `{s}`")))
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(invalid("value", format!("not a boolean: `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_device_is_valid() {
        let cfg = Config::PAPER.validate().unwrap();
        assert_eq!(cfg.detector.tau_dead, 22.0);
        assert_eq!(cfg.detector.tau_a, 33.0);
        assert_eq!(cfg.detector.p_after, 0.047);
    }

    #[test]
    fn zero_tau_a_rejected() {
        let mut cfg = Config::PAPER;
        cfg.detector.tau_a = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("tau_a must be positive"), "{err}");
    }

    #[test]
    fn probability_range_checked() {
        let mut cfg = Config::PAPER;
        cfg.detector.p_after = 1.5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("probability out of range"), "{err}");
        assert!(matches!(err, Error::InvalidParam { field: "p_after", .. }));
    }

    #[test]
    fn first_violation_reported() {
        let mut cfg = Config::PAPER;
        cfg.detector.tau_pd = -1.0;
        cfg.run.period = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParam { field: "tau_pd", .. })
        ));
    }

    #[test]
    fn units_normalise_to_ns() {
        assert_eq!(parse_duration("370ps").unwrap(), 0.37);
        assert_eq!(parse_duration("0.1 us").unwrap(), 100.0);
        assert_eq!(parse_duration("22").unwrap(), 22.0);
        assert_eq!(parse_rate("10MHz").unwrap(), 1e7);
        assert_eq!(parse_rate("235 cps").unwrap(), 235.0);
        assert!(parse_duration("3 fortnights").is_err());
        assert_eq!(parse_count("1e7").unwrap(), 10_000_000);
        assert!(parse_count("1.5").is_err());
    }

    #[test]
    fn parse_text_with_comments_and_rate() {
        let cfg = Config::parse(
            "# trimmed device\n tau_pd = 8ns  # short pulse\nrate = 20MHz\ndetector_jitter = 370 ps\n",
        )
        .unwrap();
        assert_eq!(cfg.detector.tau_pd, 8.0);
        assert_eq!(cfg.run.period, 50.0);
        assert_eq!(cfg.detector.jitter_fwhm, 0.37);
    }

    #[test]
    fn unknown_key_is_error() {
        assert_eq!(
            Config::parse("tau_dedd = 22").unwrap_err(),
            Error::UnknownKey("tau_dedd".into())
        );
    }

    #[test]
    fn period_and_rate_conflict() {
        assert!(Config::parse("period = 100\nrate = 10MHz").is_err());
    }

    #[test]
    fn fwhm_sigma() {
        let s = fwhm_to_sigma(1.0);
        assert!((s - 1.0 / (2.0 * (2.0 * 2f64.ln()).sqrt())).abs() < 1e-15);
    }

    fn arb_config() -> impl Strategy<Value = Config> {
        (
            (0.0..100.0f64, 0.0..100.0f64, 0.01..200.0f64, 0.0..=1.0f64),
            (0.0..1e6f64, 0.0..=1.0f64, 0.0..20.0f64, 0.0..2.0f64),
            (0.0..5.0f64, 0.0..2.0f64, 1e-3..1e4f64, 0.0..10.0f64),
            (1u64..u64::MAX, any::<u64>(), any::<bool>()),
        )
            .prop_map(|(a, b, c, e)| Config {
                detector: DetectorParams {
                    tau_pd: a.0,
                    tau_dead: a.1,
                    tau_a: a.2,
                    p_after: a.3,
                    dark_rate: b.0,
                    efficiency: b.1,
                    delay: b.2,
                    jitter_fwhm: b.3,
                },
                source: SourceParams {
                    mean_photons: c.0,
                    jitter_fwhm: c.1,
                },
                run: RunConfig {
                    period: c.2,
                    delta_t: c.3,
                    n_triggers: e.0,
                    seed: e.1,
                    allow_afterpulse_chains: e.2,
                },
            })
    }

    proptest! {
        #[test]
        fn render_parse_roundtrip(cfg in arb_config()) {
            let valid = cfg.validate().unwrap();
            prop_assert_eq!(Config::parse(&valid.render()).unwrap(), valid);
        }
    }
}
