mod common;

use strobe_core::analytic::min_period;
use strobe_core::sim::{child_seed, simulate, tune_intensity};
use strobe_core::stats::{autocorr, bias};
use strobe_core::{DetectorParams, RunConfig, SourceParams};

/// The simulator reproduces the first-order event model wherever the
/// period exceeds the dead-time threshold.
#[test]
fn lag1_matches_event_model() {
    let n = 100_000_000u64;
    let mut failures = Vec::new();
    for (i, tau_pd) in [8.0, 21.0].into_iter().enumerate() {
        for (j, period) in [100.0, 67.0, 57.0, 50.0].into_iter().enumerate() {
            if period <= min_period(22.0, tau_pd, 2.0) {
                continue;
            }
            let det = DetectorParams::PAPER.with_tau_pd(tau_pd);
            let run = RunConfig::PAPER
                .with_period(period)
                .with_triggers(n)
                .with_seed(child_seed(42, (4 * i + j) as u64));
            let mu = tune_intensity(&det, &SourceParams::PAPER, &run, 0.5, 5e-4).unwrap();
            let src = SourceParams { mean_photons: mu, ..SourceParams::PAPER };
            let res = simulate(&det, &src, &run).unwrap();
            let (a1, err) = autocorr(&res.bits, 1).unwrap();
            let p_photon = 1.0 - (-mu * det.efficiency).exp();
            let model = common::event_model_a1(&det, period, 2.0, p_photon);
            eprintln!("T={period} tau_pd={tau_pd}: a1_hat={a1:.3e} model={model:.3e} err={err:.1e}");
            if (a1 - model).abs() >= 3.0 * err {
                failures.push((period, tau_pd, a1, model));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn fair_ideal_device_bias() {
    let n = 1_000_000u64;
    let cfg = strobe_core::Preset::Ideal.config();
    let res = simulate(&cfg.detector, &cfg.source, &cfg.run.with_triggers(n)).unwrap();
    let (b, _) = bias(&res.bits).unwrap();
    assert!(b.abs() < 3.0 * 0.5 / (n as f64).sqrt(), "b = {b}");
}

/// a1 over 20 seeds scatters like the quoted standard error.
#[test]
fn seed_scatter_matches_error() {
    let n = 1_000_000u64;
    let det = DetectorParams::PAPER;
    let a: Vec<f64> = (0..20)
        .map(|s| {
            let run = RunConfig::PAPER.with_triggers(n).with_seed(child_seed(7, s));
            autocorr(&simulate(&det, &SourceParams::PAPER, &run).unwrap().bits, 1).unwrap().0
        })
        .collect();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let var = 1.0 / (n - 1) as f64;
    let chi2: f64 = a.iter().map(|x| (x - mean).powi(2) / var).sum();
    // 0.1% and 99.9% quantiles of chi-square with 19 degrees of freedom
    assert!((5.4068..43.8202).contains(&chi2), "chi2 = {chi2}");
}
