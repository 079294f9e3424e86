//! `strobe`: simulate, predict, sweep and analyze triggered detector QRNG streams.
//!
//! Summaries go to stdout as `key=value` lines, CSV tables go to stdout or
//! `--out`, and diagnostics go to stderr.

mod files;
mod opts;

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use strobe_core::analytic::{
    self, min_period, optimal_tau_pd, predict_a1, predict_lag_k, predict_p1,
};
use strobe_core::bitio::write_sweep_csv;
use strobe_core::config::{parse_duration, parse_rate};
use strobe_core::extract::{von_neumann, xor_pairs, xor_streams};
use strobe_core::sim::{self, simulate, tune_intensity};
use strobe_core::stats::{autocorr, bias};
use strobe_core::{SensitivityParam, SourceParams, StatsReport, SweepAxis, SweepOptions, TestKind};

use files::{InFormat, OutFormat};
use opts::ConfigArgs;

#[derive(Debug, Parser)]
#[command(name = "strobe", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the event-driven simulator and write the bit stream
    Simulate(SimulateArgs),
    /// Closed-form predictions
    #[command(subcommand)]
    Predict(PredictCmd),
    /// Re-tune and simulate over a grid, emitting CSV
    Sweep(SweepArgs),
    /// Bias, lag profile and statistical tests of a bit file
    Analyze(AnalyzeArgs),
    /// XOR two bit files, or adjacent pairs of one with --pairs
    Xor(XorArgs),
    /// Von Neumann extractor
    Vn(VnArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output bit file
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "packed")]
    format: OutFormat,
    /// Tune the mean photon number to this ones-probability first
    #[arg(long, value_name = "P1")]
    tune: Option<f64>,
    /// Tuning tolerance on p1
    #[arg(long, default_value_t = 5e-4)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum PredictCmd {
    /// Lag-1 correlation and its two afterpulse windows
    A1(ConfigOnly),
    /// Pulse width that cancels a1
    OptimalTaupd(ConfigOnly),
    /// Shortest period before the windows clamp
    MinPeriod(ConfigOnly),
    /// Partial derivatives of a1 (one, or all when --wrt is omitted)
    Sensitivity {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_name = "tau-pd|tau-dead|period")]
        wrt: Option<SensitivityParam>,
    },
    /// a_k for k = 1..=K
    LagK {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 4)]
        k: u32,
    },
    /// Bias and a1 after XOR-ing two independent streams
    Xor2(XorPrediction),
    /// Bias and a1 after XOR-ing adjacent pairs of one stream
    XorPairs(XorPrediction),
    /// Ones-probability for a mean photon number, or the inverse with --target
    P1 {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        target: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct ConfigOnly {
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Debug, Args)]
struct XorPrediction {
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, allow_hyphen_values = true)]
    a1: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    TauPd,
    Rate,
}

#[derive(Debug, Args)]
struct SweepArgs {
    axis: Axis,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, requires_all = ["to", "step"], conflicts_with = "list", allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    step: Option<String>,
    /// Comma-separated grid; a unit on the last value applies to all
    #[arg(long)]
    list: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    target_p1: f64,
    #[arg(long, default_value_t = 5e-4)]
    tol: f64,
    /// Evaluate points concurrently; output is identical to a serial run
    #[arg(long)]
    parallel: bool,
    /// CSV destination instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: InFormat,
    /// Skip whitespace in ascii input
    #[arg(long)]
    lenient: bool,
    /// Largest lag of the correlation profile
    #[arg(long, default_value_t = 16)]
    lags: usize,
    /// Comma-separated tests: monobit, block_frequency[:M], runs, all, none
    #[arg(long, default_value = "all")]
    tests: String,
    /// Print the test table as CSV instead of the text report
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct XorArgs {
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    pairs: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    in_format: InFormat,
    #[arg(long, value_enum, default_value = "packed")]
    format: OutFormat,
}

#[derive(Debug, Args)]
struct VnArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    in_format: InFormat,
    #[arg(long, value_enum, default_value = "packed")]
    format: OutFormat,
}

/// Collects `key=value` lines for stdout.
#[derive(Default)]
struct Summary(String);

impl Summary {
    fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push_str(&format!("{key}={value}\n"));
        self
    }

    fn print(&self) -> Result<()> {
        let mut out = std::io::stdout().lock();
        out.write_all(self.0.as_bytes())?;
        Ok(out.flush()?)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Predict(p) => cmd_predict(p),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Xor(a) => cmd_xor(a),
        Cmd::Vn(a) => cmd_vn(a),
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = a.cfg.build()?;
    if let Some(target) = a.tune {
        let mu = tune_intensity(&cfg.detector, &cfg.source, &cfg.run, target, a.tol)?;
        cfg.source = SourceParams { mean_photons: mu, ..cfg.source };
    }
    let res = simulate(&cfg.detector, &cfg.source, &cfg.run)?;
    files::write(&a.out, &res.bits, a.format)?;

    let pred = predict_a1(&cfg.detector, cfg.run.period, cfg.run.delta_t);
    let t_min = min_period(cfg.detector.tau_dead, cfg.detector.tau_pd, cfg.run.delta_t);
    if pred.truncated {
        eprintln!(
            "warning: period {} ns is below min_period {t_min:.3} ns; the closed-form a1 is clamped",
            cfg.run.period
        );
    }
    let (b, _) = bias(&res.bits)?;
    let (a1, a1_err) = if res.bits.len() >= 2 {
        autocorr(&res.bits, 1).unwrap_or((f64::NAN, f64::NAN))
    } else {
        (f64::NAN, f64::NAN)
    };
    let c = res.counts;
    Summary::default()
        .put("n", res.bits.len())
        .put("seed", cfg.run.seed)
        .put("period_ns", cfg.run.period)
        .put("mean_photons", cfg.source.mean_photons)
        .put("p1_hat", res.p1_hat)
        .put("bias", b)
        .put("a1_hat", a1)
        .put("a1_err", a1_err)
        .put("a1_pred", pred.a1)
        .put("min_period_ns", t_min)
        .put("truncated", pred.truncated)
        .put("photon", c.photon)
        .put("afterpulse", c.afterpulse)
        .put("dark", c.dark)
        .put("suppressed", c.suppressed)
        .put("strobe_miss", c.strobe_miss)
        .put("out", a.out.display())
        .print()
}

fn detector_inputs(s: &mut Summary, cfg: &strobe_core::Config) {
    let d = &cfg.detector;
    s.put("tau_pd_ns", d.tau_pd)
        .put("tau_dead_ns", d.tau_dead)
        .put("tau_a_ns", d.tau_a)
        .put("p_after", d.p_after)
        .put("period_ns", cfg.run.period)
        .put("delta_t_ns", cfg.run.delta_t);
}

fn cmd_predict(p: PredictCmd) -> Result<()> {
    let mut s = Summary::default();
    match p {
        PredictCmd::A1(ConfigOnly { cfg }) => {
            let cfg = cfg.build()?;
            detector_inputs(&mut s, &cfg);
            let pred = predict_a1(&cfg.detector, cfg.run.period, cfg.run.delta_t);
            s.put("p_plus", pred.p_plus)
                .put("p_minus", pred.p_minus)
                .put("a1", pred.a1)
                .put("truncated", pred.truncated);
        }
        PredictCmd::OptimalTaupd(ConfigOnly { cfg }) => {
            let cfg = cfg.build()?;
            let d = &cfg.detector;
            s.put("tau_dead_ns", d.tau_dead)
                .put("tau_a_ns", d.tau_a)
                .put("tau_pd_opt_ns", optimal_tau_pd(d.tau_dead, d.tau_a)?);
        }
        PredictCmd::MinPeriod(ConfigOnly { cfg }) => {
            let cfg = cfg.build()?;
            let d = &cfg.detector;
            let t = min_period(d.tau_dead, d.tau_pd, cfg.run.delta_t);
            s.put("tau_dead_ns", d.tau_dead)
                .put("tau_pd_ns", d.tau_pd)
                .put("delta_t_ns", cfg.run.delta_t)
                .put("min_period_ns", t)
                .put("max_rate_mhz", 1e3 / t);
        }
        PredictCmd::Sensitivity { cfg, wrt } => {
            let cfg = cfg.build()?;
            detector_inputs(&mut s, &cfg);
            let all = [SensitivityParam::TauPd, SensitivityParam::TauDead, SensitivityParam::Period];
            for which in wrt.map_or(all.to_vec(), |w| vec![w]) {
                let key = match which {
                    SensitivityParam::TauPd => "da1_dtau_pd",
                    SensitivityParam::TauDead => "da1_dtau_dead",
                    SensitivityParam::Period => "da1_dperiod",
                };
                let v = analytic::sensitivity(&cfg.detector, cfg.run.period, cfg.run.delta_t, which)?;
                s.put(key, v);
            }
        }
        PredictCmd::LagK { cfg, k } => {
            let cfg = cfg.build()?;
            detector_inputs(&mut s, &cfg);
            let a1 = predict_a1(&cfg.detector, cfg.run.period, cfg.run.delta_t).a1;
            for lag in 1..=k {
                let v = predict_lag_k(a1, cfg.run.period, cfg.detector.tau_a, lag)?;
                s.put(&format!("a{lag}"), v);
            }
        }
        PredictCmd::Xor2(x) => {
            let (b, a1) = analytic::xor_two_streams_prediction(x.b, x.a1)?;
            s.put("b", x.b).put("a1", x.a1).put("b_out", b).put("a1_out", a1);
        }
        PredictCmd::XorPairs(x) => {
            let (b, a1) = analytic::xor_adjacent_prediction(x.b, x.a1)?;
            s.put("b", x.b).put("a1", x.a1).put("b_out", b).put("a1_out", a1);
        }
        PredictCmd::P1 { cfg, target } => {
            let cfg = cfg.build()?;
            let eta = cfg.detector.efficiency;
            s.put("efficiency", eta);
            match target {
                Some(p1) => {
                    s.put("p1", p1)
                        .put("mean_photons", analytic::mean_photons_for_p1(p1, eta)?);
                }
                None => {
                    let mu = cfg.source.mean_photons;
                    s.put("mean_photons", mu).put("p1", predict_p1(mu, eta)?);
                }
            }
        }
    }
    s.print()
}

/// Parses a grid value for `axis`, in MHz for rates and ns for widths.
fn grid_value(axis: Axis, text: &str, unit: &str) -> Result<f64> {
    let text = text.trim();
    let has_unit = text.ends_with(|c: char| c.is_ascii_alphabetic());
    let full = if has_unit { text.to_string() } else { format!("{text}{unit}") };
    Ok(match axis {
        Axis::Rate => parse_rate(&full)? / 1e6,
        Axis::TauPd => parse_duration(&full)?,
    })
}

fn build_grid(a: &SweepArgs) -> Result<Vec<f64>> {
    let default_unit = match a.axis {
        Axis::Rate => "MHz",
        Axis::TauPd => "ns",
    };
    if let Some(list) = &a.list {
        let items: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let last = items.last().context("empty --list")?;
        let unit = last.trim_start_matches(|c: char| !c.is_ascii_alphabetic());
        let unit = if unit.is_empty() { default_unit } else { unit };
        return items.iter().map(|v| grid_value(a.axis, v, unit)).collect();
    }
    let (Some(from), Some(to), Some(step)) = (&a.from, &a.to, &a.step) else {
        bail!("give either --list or --from/--to/--step");
    };
    let from = grid_value(a.axis, from, default_unit)?;
    let to = grid_value(a.axis, to, default_unit)?;
    let step = grid_value(a.axis, step, default_unit)?;
    if !(step > 0.0) || to < from {
        bail!("grid needs step > 0 and to >= from");
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let cfg = a.cfg.build()?;
    let grid = build_grid(&a)?;
    let axis = match a.axis {
        Axis::TauPd => SweepAxis::TauPd,
        Axis::Rate => SweepAxis::Rate,
    };
    let opts = SweepOptions {
        target_p1: a.target_p1,
        tune_tol: a.tol,
        parallel: a.parallel,
    };
    eprintln!("sweeping {} points, n={} each", grid.len(), cfg.run.n_triggers);
    let rows = sim::sweep(&cfg.detector, &cfg.source, &cfg.run, axis, &grid, &opts);
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("point {}: {}", r.axis_value, r.error.as_deref().unwrap_or_default());
    }
    let csv = write_sweep_csv(&rows);
    match &a.out {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display())),
        None => Summary(csv).print(),
    }
}

fn parse_tests(list: &str) -> Result<Vec<TestKind>> {
    match list.trim() {
        "all" => Ok(TestKind::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        l => Ok(l.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?),
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let bits = files::read(&a.file, a.format, a.lenient)?;
    let tests = parse_tests(&a.tests)?;
    let mut lags = a.lags.min(bits.len().saturating_sub(1));
    if lags < a.lags {
        eprintln!("warning: only {} bits, lag profile limited to {lags}", bits.len());
    }
    let ones = bits.count_ones();
    if lags > 0 && (ones == 0 || ones == bits.len() as u64) {
        eprintln!("warning: constant stream, autocorrelation undefined");
        lags = 0;
    }
    let report = StatsReport::analyze(&bits, lags, &tests)?;
    let text = if a.csv { report.render_csv() } else { report.render_table() };
    Summary(text).print()
}

fn cmd_xor(a: XorArgs) -> Result<()> {
    let out = match (a.pairs, a.inputs.as_slice()) {
        (true, [one]) => xor_pairs(&files::read(one, a.in_format, false)?)?,
        (false, [x, y]) => xor_streams(
            &files::read(x, a.in_format, false)?,
            &files::read(y, a.in_format, false)?,
        )?,
        (true, _) => bail!("--pairs takes exactly one input"),
        (false, _) => bail!("xor takes two inputs (or one with --pairs)"),
    };
    files::write(&a.out, &out, a.format)?;
    Summary::default().put("n", out.len()).put("out", a.out.display()).print()
}

fn cmd_vn(a: VnArgs) -> Result<()> {
    let input = files::read(&a.input, a.in_format, false)?;
    let out = von_neumann(&input);
    files::write(&a.out, &out, a.format)?;
    Summary::default()
        .put("n_in", input.len())
        .put("n", out.len())
        .put("yield", out.len() as f64 / input.len().max(1) as f64)
        .put("out", a.out.display())
        .print()
}
