//! Closed-form afterpulse correlation model.
//!
//! With exponential afterpulsing `P_a(t) = (P/τa)·exp(-t/τa)`, the lag-1
//! autocorrelation is half the difference between the coincidence term
//! `P+` (an afterpulse whose output covers the next strobe) and half the
//! blinding term `P-` (an afterpulse whose dead time swallows the next
//! photon). Windows are measured from the detection that produced a `1`.

use crate::config::DetectorParams;
use crate::error::{invalid, Error, Result};

/// Lag-1 prediction with its two constituent probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A1Prediction {
    pub a1: f64,
    /// Coincidence enhancement.
    pub p_plus: f64,
    /// Dead-time blinding (already carries its factor 1/2).
    pub p_minus: f64,
    /// A window lower bound was clamped at `tau_dead`; the model is
    /// qualitative in this regime.
    pub truncated: bool,
}

/// Parameter to differentiate `a1` with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityParam {
    TauPd,
    TauDead,
    Period,
}

impl std::str::FromStr for SensitivityParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau_pd" | "tau-pd" => Ok(Self::TauPd),
            "tau_dead" | "tau-dead" => Ok(Self::TauDead),
            "period" | "T" => Ok(Self::Period),
            other => Err(invalid(
                "which",
                format!("unknown sensitivity parameter `{other}` (tau_pd, tau_dead, period)"),
            )),
        }
    }
}

/// Afterpulse probability density at `t` ns after a detection, per ns.
pub fn afterpulse_pdf(t: f64, p_after: f64, tau_a: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("afterpulse delay must be >= 0, got {t}")));
    }
    if !(tau_a > 0.0) {
        return Err(invalid("tau_a", "tau_a must be positive"));
    }
    Ok(p_after / tau_a * (-t / tau_a).exp())
}

/// Probability that an exponential afterpulse lands in `[lo, hi]`.
/// Empty or inverted windows give zero.
pub fn afterpulse_window(lo: f64, hi: f64, p_after: f64, tau_a: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let lo = lo.max(0.0);
    // exp(-lo/τ) - exp(-hi/τ) without cancellation for narrow windows.
    p_after * (-lo / tau_a).exp() * -(-(hi - lo) / tau_a).exp_m1()
}

/// Probability that a Poisson(`mu`) pulse yields at least one detection
/// with per-photon efficiency `eta`.
pub fn predict_p1(mu: f64, eta: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(invalid("mean_photons", format!("mean_photons must be >= 0, got {mu}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("efficiency", format!("probability out of range: {eta}")));
    }
    Ok(-(-mu * eta).exp_m1())
}

/// Inverse of [`predict_p1`] in `mu`.
pub fn mean_photons_for_p1(p1: f64, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p1) {
        return Err(invalid("target_p1", format!("target must be in [0, 1), got {p1}")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("efficiency", format!("efficiency must be in (0, 1], got {eta}")));
    }
    Ok(-(-p1).ln_1p() / eta)
}

/// Lag-1 autocorrelation at trigger period `period` and strobe margin `delta_t`.
pub fn predict_a1(det: &DetectorParams, period: f64, delta_t: f64) -> A1Prediction {
    let (p, tau_a, dead) = (det.p_after, det.tau_a, det.tau_dead);
    let strobe = period + delta_t;
    let plus_lo_raw = strobe - det.tau_pd;
    let minus_lo_raw = plus_lo_raw - dead;
    let plus_lo = plus_lo_raw.max(dead);
    let minus_lo = minus_lo_raw.max(dead);
    let truncated = plus_lo_raw < dead || minus_lo_raw < dead;

    let p_plus = afterpulse_window(plus_lo, strobe, p, tau_a);
    let p_minus = 0.5 * afterpulse_window(minus_lo, plus_lo, p, tau_a);
    A1Prediction {
        a1: 0.5 * (p_plus - p_minus),
        p_plus,
        p_minus,
        truncated,
    }
}

/// Expanded unclamped closed form of [`predict_a1`]; only meaningful when
/// `period > min_period`.
pub fn a1_unclamped(det: &DetectorParams, period: f64, delta_t: f64) -> f64 {
    let tau_a = det.tau_a;
    let e_pd = (det.tau_pd / tau_a).exp();
    let e_dead = (det.tau_dead / tau_a).exp();
    0.5 * det.p_after
        * (-(period + delta_t) / tau_a).exp()
        * ((e_pd - 1.0) - 0.5 * e_pd * (e_dead - 1.0))
}

/// Pulse width that cancels the lag-1 correlation for this dead time and
/// afterpulse constant. Independent of the trigger period.
pub fn optimal_tau_pd(tau_dead: f64, tau_a: f64) -> Result<f64> {
    if !(tau_a > 0.0) {
        return Err(invalid("tau_a", "tau_a must be positive"));
    }
    if !(tau_dead >= 0.0) {
        return Err(invalid("tau_dead", format!("tau_dead must be >= 0, got {tau_dead}")));
    }
    let ratio = tau_dead / tau_a;
    let denom = 3.0 - ratio.exp();
    if denom <= 0.0 {
        return Err(Error::NoZeroCrossing { ratio });
    }
    Ok(tau_a * (2.0 / denom).ln())
}

/// Shortest trigger period for which neither correlation window is clamped
/// by the dead time.
pub fn min_period(tau_dead: f64, tau_pd: f64, delta_t: f64) -> f64 {
    2.0 * tau_dead + tau_pd - delta_t
}

/// Closed-form partial derivative of the unclamped `a1`, per ns.
///
/// The `tau_pd` and `tau_dead` derivatives carry `4·tau_a` in their
/// denominators, as differentiating [`predict_a1`] gives.
pub fn sensitivity(
    det: &DetectorParams,
    period: f64,
    delta_t: f64,
    which: SensitivityParam,
) -> Result<f64> {
    let m = min_period(det.tau_dead, det.tau_pd, delta_t);
    if period < m {
        return Err(Error::ClampedRegime {
            period,
            min_period: m,
        });
    }
    let (p, tau_a) = (det.p_after, det.tau_a);
    let tail = (-(period + delta_t - det.tau_pd) / tau_a).exp();
    let e_dead = (det.tau_dead / tau_a).exp();
    Ok(match which {
        SensitivityParam::TauPd => p / (4.0 * tau_a) * (3.0 - e_dead) * tail,
        SensitivityParam::TauDead => -p / (4.0 * tau_a) * e_dead * tail,
        SensitivityParam::Period => -predict_a1(det, period, delta_t).a1 / tau_a,
    })
}

/// Lag-`k` coefficient from the lag-1 value: shifting both windows by
/// `(k-1)·T` scales the exponential by `exp(-(k-1)·T/tau_a)`.
pub fn predict_lag_k(a1: f64, period: f64, tau_a: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "lag must be >= 1"));
    }
    Ok(a1 * (-(f64::from(k - 1)) * period / tau_a).exp())
}

/// Bias and lag-1 correlation after XOR-ing two independent streams that
/// share `(b, a1)`.
pub fn xor_two_streams_prediction(b: f64, a1: f64) -> Result<(f64, f64)> {
    check_bias(b)?;
    Ok((-2.0 * b * b, a1 * a1 + 8.0 * a1 * b * b))
}

/// Bias and lag-1 correlation after XOR-ing non-overlapping pairs of one stream.
pub fn xor_adjacent_prediction(b: f64, a1: f64) -> Result<(f64, f64)> {
    check_bias(b)?;
    Ok((-2.0 * b * b - a1 / 2.0, 4.0 * a1 * b * b))
}

fn check_bias(b: f64) -> Result<()> {
    if b.abs() <= 0.5 {
        Ok(())
    } else {
        Err(invalid("b", format!("|b| must be <= 0.5, got {b}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PAPER: DetectorParams = DetectorParams::PAPER;

    /// Adaptive Simpson, used as an independent quadrature oracle.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, eps: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64 + Copy>(
            f: F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * eps || delta.abs() <= 1e-15 * (left + right).abs() {
                return left + right + delta / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        if b <= a {
            return 0.0;
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, eps, 40)
    }

    fn a1_by_quadrature(det: &DetectorParams, period: f64, delta_t: f64, shift: f64) -> f64 {
        let pdf = |t: f64| afterpulse_pdf(t, det.p_after, det.tau_a).unwrap();
        let hi = period + delta_t + shift;
        let lo1 = (hi - det.tau_pd).max(det.tau_dead + shift);
        let lo2 = (hi - det.tau_pd - det.tau_dead).max(det.tau_dead + shift);
        let scale = pdf(lo2) * det.tau_a;
        let plus = simpson(pdf, lo1, hi, 1e-17 * scale);
        let minus = 0.5 * simpson(pdf, lo2, lo1, 1e-17 * scale);
        0.5 * (plus - minus)
    }

    #[test]
    fn pdf_values() {
        assert_relative_eq!(afterpulse_pdf(0.0, 0.047, 33.0).unwrap(), 0.047 / 33.0);
        assert_relative_eq!(
            afterpulse_pdf(0.0, 0.047, 33.0).unwrap(),
            1.424_242_424_242_424e-3,
            max_relative = 1e-12
        );
        for t in [0.0, 1.0, 50.0] {
            assert_eq!(afterpulse_pdf(t, 0.0, 33.0).unwrap(), 0.0);
        }
        assert!(afterpulse_pdf(-1.0, 0.047, 33.0).is_err());
    }

    #[test]
    fn pdf_integrates_to_p_by_trapezoid() {
        // Trapezoid on [0, 40·τa] with h = 1e-3 ns; tail beyond is e^-40.
        let (tau_a, p) = (33.0, 0.047);
        let h = 1e-3;
        let n = (40.0 * tau_a / h) as usize;
        let mut sum = 0.5 * (afterpulse_pdf(0.0, p, tau_a).unwrap()
            + afterpulse_pdf(n as f64 * h, p, tau_a).unwrap());
        for i in 1..n {
            sum += afterpulse_pdf(i as f64 * h, p, tau_a).unwrap();
        }
        assert_relative_eq!(sum * h, 0.047, max_relative = 1e-6);
    }

    #[test]
    fn p1_values() {
        assert_eq!(predict_p1(0.0, 0.65).unwrap(), 0.0);
        assert_relative_eq!(predict_p1(2f64.ln(), 1.0).unwrap(), 0.5, max_relative = 1e-15);
        // Bisection oracle (scipy.optimize.bisect) gives mu = 1.0663802777845266.
        assert_relative_eq!(predict_p1(1.066_380_277_784_526_6, 0.65).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            mean_photons_for_p1(0.5, 0.65).unwrap(),
            1.066_380_277_784_526_6,
            max_relative = 1e-13
        );
        assert!(predict_p1(-1.0, 0.5).is_err());
        assert!(predict_p1(1.0, 1.5).is_err());
    }

    #[test]
    fn a1_reference_device_values() {
        let root = optimal_tau_pd(22.0, 33.0).unwrap();
        let at_root = predict_a1(&PAPER.with_tau_pd(root), 100.0, 2.0);
        assert!(at_root.a1.abs() < 1e-12, "{at_root:?}");
        assert!(!at_root.truncated);

        // Frozen from scipy.integrate.quad of the two windows.
        let p21 = predict_a1(&PAPER, 100.0, 2.0);
        assert_relative_eq!(p21.a1, -6.218_334_452_866_769e-6, max_relative = 1e-9);
        assert_relative_eq!(p21.p_plus, 1.900_756_386_730_530_8e-3, max_relative = 1e-12);
        assert_relative_eq!(p21.p_minus, 1.913_193_055_636_264_4e-3, max_relative = 1e-12);

        let p8 = predict_a1(&PAPER.with_tau_pd(8.0), 100.0, 2.0);
        assert_relative_eq!(p8.a1, -3.520_454_189_234_258e-4, max_relative = 1e-9);
        assert!(p8.a1 < 0.0);
        assert_eq!(p21.a1, (p21.p_plus - p21.p_minus) / 2.0);
    }

    #[test]
    fn no_afterpulsing_no_correlation() {
        let mut det = PAPER;
        det.p_after = 0.0;
        for tau_pd in [1.0, 8.0, 21.0, 30.0] {
            for period in [30.0, 63.0, 100.0, 1000.0] {
                assert_eq!(predict_a1(&det.with_tau_pd(tau_pd), period, 2.0).a1, 0.0);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_on_grid() {
        for period in [63.0, 64.0, 80.0, 100.0, 150.0, 250.0, 400.0, 700.0, 1000.0] {
            for tau_pd in 1..=30 {
                let det = PAPER.with_tau_pd(tau_pd as f64);
                let pred = predict_a1(&det, period, 2.0);
                let quad = a1_by_quadrature(&det, period, 2.0, 0.0);
                let tol = 1e-9 * pred.a1.abs();
                assert!(
                    (pred.a1 - quad).abs() <= tol,
                    "T={period} tau_pd={tau_pd}: {} vs {quad}",
                    pred.a1
                );
                if period > min_period(det.tau_dead, det.tau_pd, 2.0) {
                    assert!(!pred.truncated);
                    let cf = a1_unclamped(&det, period, 2.0);
                    assert!((pred.a1 - cf).abs() <= 1e-9 * pred.a1.abs(), "T={period} tau_pd={tau_pd}");
                }
            }
        }
    }

    #[test]
    fn optimal_width_values() {
        assert_relative_eq!(optimal_tau_pd(22.0, 33.0).unwrap(), 21.192_642_421_846_49, max_relative = 1e-12);
        assert_eq!(optimal_tau_pd(0.0, 33.0).unwrap(), 0.0);
        assert!(matches!(optimal_tau_pd(40.0, 33.0), Err(Error::NoZeroCrossing { .. })));
        assert!(optimal_tau_pd(22.0, 0.0).is_err());
    }

    #[test]
    fn optimal_width_zeroes_a1_across_domain() {
        for tau_a in [5.0, 10.0, 33.0, 60.0, 200.0] {
            for frac in [0.0, 0.1, 0.3, 0.6, 0.9, 0.99] {
                let tau_dead = frac * 3f64.ln() * tau_a;
                let tau_pd = optimal_tau_pd(tau_dead, tau_a).unwrap();
                let det = DetectorParams { tau_pd, tau_dead, tau_a, ..PAPER };
                let period = min_period(tau_dead, tau_pd, 2.0) + 1.0;
                let a1 = predict_a1(&det, period, 2.0).a1;
                assert!(a1.abs() < 1e-12, "tau_a={tau_a} tau_dead={tau_dead}: {a1}");
            }
        }
    }

    #[test]
    fn min_period_values() {
        assert_eq!(min_period(22.0, 21.0, 2.0), 63.0);
        let max_rate_mhz = 1e3 / min_period(22.0, 21.0, 2.0);
        assert!((max_rate_mhz - 15.87).abs() < 0.01);
        assert_eq!(min_period(0.0, 0.0, 0.0), 0.0);
        assert!(predict_a1(&PAPER, 62.0, 2.0).truncated);
        assert!(!predict_a1(&PAPER, 64.0, 2.0).truncated);
    }

    #[test]
    fn sensitivities_at_operating_point() {
        let s = |w| sensitivity(&PAPER, 100.0, 2.0, w).unwrap();
        assert_relative_eq!(s(SensitivityParam::TauPd), 32e-6, max_relative = 0.05);
        assert_relative_eq!(s(SensitivityParam::TauDead), -59e-6, max_relative = 0.05);
        // 0.188e-6: the quoted 0.2e-6 is this value at one significant figure.
        assert_relative_eq!(s(SensitivityParam::Period), 1.884_343_773_6e-7, max_relative = 1e-9);
        assert!(matches!(
            sensitivity(&PAPER, 50.0, 2.0, SensitivityParam::TauPd),
            Err(Error::ClampedRegime { .. })
        ));
    }

    #[test]
    fn sensitivities_match_central_differences() {
        let h = 1e-3;
        for (tau_pd, period) in [(21.0, 100.0), (8.0, 100.0), (15.0, 80.0), (21.0, 200.0)] {
            let det = PAPER.with_tau_pd(tau_pd);
            let fd_pd = (predict_a1(&det.with_tau_pd(tau_pd + h), period, 2.0).a1
                - predict_a1(&det.with_tau_pd(tau_pd - h), period, 2.0).a1)
                / (2.0 * h);
            let dead = |d: f64| predict_a1(&DetectorParams { tau_dead: d, ..det }, period, 2.0).a1;
            let fd_dead = (dead(det.tau_dead + h) - dead(det.tau_dead - h)) / (2.0 * h);
            let fd_t = (predict_a1(&det, period + h, 2.0).a1 - predict_a1(&det, period - h, 2.0).a1)
                / (2.0 * h);
            let s = |w| sensitivity(&det, period, 2.0, w).unwrap();
            assert_relative_eq!(s(SensitivityParam::TauPd), fd_pd, max_relative = 1e-4);
            assert_relative_eq!(s(SensitivityParam::TauDead), fd_dead, max_relative = 1e-4);
            assert_relative_eq!(s(SensitivityParam::Period), fd_t, max_relative = 1e-4);
        }
    }

    #[test]
    fn lag_k_decay() {
        assert_eq!(predict_lag_k(-3e-4, 100.0, 33.0, 1).unwrap(), -3e-4);
        let r = predict_lag_k(1.0, 100.0, 33.0, 2).unwrap();
        assert_relative_eq!(1.0 / r, 20.703_505_428_435_11, max_relative = 1e-12);
        assert!(predict_lag_k(1.0, 100.0, 33.0, 0).is_err());

        let a1 = predict_a1(&PAPER.with_tau_pd(8.0), 100.0, 2.0).a1;
        let mut prev = a1.abs();
        for k in 2..=10u32 {
            let ak = predict_lag_k(a1, 100.0, 33.0, k).unwrap();
            assert!(ak.abs() < prev);
            prev = ak.abs();
            // Shifting both windows by (k-1)T, evaluated by quadrature.
            let shifted = a1_by_quadrature(&PAPER.with_tau_pd(8.0), 100.0, 2.0, f64::from(k - 1) * 100.0);
            assert_relative_eq!(ak, shifted, max_relative = 1e-8);
        }
    }

    #[test]
    fn xor_algebra() {
        let (b2, a2) = xor_two_streams_prediction(5e-4, 5e-5).unwrap();
        assert_relative_eq!(b2, -5e-7, max_relative = 1e-12);
        assert_relative_eq!(a2, 2.6e-9, max_relative = 1e-12);
        assert!(b2.abs() <= 5e-7 * (1.0 + 1e-12) && a2.abs() <= 3e-9);
        assert_eq!(xor_two_streams_prediction(0.0, 0.0).unwrap(), (0.0, 0.0));

        let (bp, ap) = xor_adjacent_prediction(5e-4, 5e-5).unwrap();
        assert_relative_eq!(ap, 5e-11, max_relative = 1e-12);
        assert_relative_eq!(bp, -2.55e-5, max_relative = 1e-12);
        assert_eq!(xor_adjacent_prediction(0.0, 0.0).unwrap(), (0.0, 0.0));
        assert!(xor_adjacent_prediction(0.6, 0.0).is_err());

        for (b, a) in [(0.01, 0.02), (0.3, -0.1), (0.49, 0.7)] {
            assert_eq!(xor_two_streams_prediction(b, a).unwrap(), xor_two_streams_prediction(-b, a).unwrap());
            assert_eq!(xor_adjacent_prediction(b, a).unwrap(), xor_adjacent_prediction(-b, a).unwrap());
        }
    }
}
