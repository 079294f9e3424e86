#![allow(dead_code)]

use strobe_core::{BitBuffer, DetectorParams};

/// Direct O(N k) evaluation with the sample mean of the whole sequence
/// and both sums over the first N - k terms.
pub fn naive_autocorr(bits: &BitBuffer, k: usize) -> f64 {
    let x: Vec<f64> = bits.iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n - k {
        num += (x[i] - mean) * (x[i + k] - mean);
        den += (x[i] - mean) * (x[i] - mean);
    }
    num / den
}

fn window(det: &DetectorParams, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    det.p_after * ((-lo / det.tau_a).exp() - (-hi / det.tau_a).exp())
}

/// First-order lag-1 correlation of the event-driven detector.
///
/// Given a detection at the strobe window of trigger n (time 0), its
/// afterpulse either lands in `[T + dt - tau_pd, T + dt]` and forces bit n+1
/// to one (matters only when no photon was coming, weight `1 - p`), or lands
/// in `[T - tau_dead, T + dt - tau_pd]`, blinds the detector for the next
/// photon and ends before the next strobe (matters only when a photon was
/// coming, weight `p`). Afterpulses before `tau_dead` are never accepted.
pub fn event_model_a1(det: &DetectorParams, period: f64, delta_t: f64, p_photon: f64) -> f64 {
    let strobe = period + delta_t;
    let plus = window(det, (strobe - det.tau_pd).max(det.tau_dead), strobe);
    let blind_hi = period.min(strobe - det.tau_pd);
    let minus = window(det, (period - det.tau_dead).max(det.tau_dead), blind_hi);
    (1.0 - p_photon) * plus - p_photon * minus
}
