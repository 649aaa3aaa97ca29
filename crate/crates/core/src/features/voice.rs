//! Period-level voice quality: pulse marking, jitter, shimmer and HNR.

/// One glottal-cycle mark: sub-sample position and peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub pos: f64,
    pub amp: f64,
}

/// Runs shorter than this many periods yield no perturbation measures.
pub const MIN_PERIODS: usize = 3;

fn refine_peak(x: &[f64], i: usize) -> Pulse {
    if i == 0 || i + 1 >= x.len() {
        return Pulse { pos: i as f64, amp: x[i] };
    }
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return Pulse { pos: i as f64, amp: b };
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    Pulse { pos: i as f64 + delta, amp: b - 0.25 * (a - c) * delta }
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).fold(lo, |best, i| if x[i] > x[best] { i } else { best })
}

/// Marks successive positive waveform peaks one period apart over
/// `[start, end)`. `period_at(sample)` gives the local period in samples from
/// the f0 track. Each next peak is searched within ±20 % of the expected
/// period; a chain stops when the search window leaves the span or the peak
/// is not positive.
pub fn mark_pulses(x: &[f64], start: usize, end: usize, period_at: impl Fn(usize) -> f64) -> Vec<Pulse> {
    let end = end.min(x.len());
    let mut pulses = Vec::new();
    if start >= end {
        return pulses;
    }
    let first_period = period_at(start).round().max(2.0) as usize;
    if start + first_period > end {
        return pulses;
    }
    let mut i = argmax(x, start, start + first_period);
    if x[i] <= 0.0 {
        return pulses;
    }
    pulses.push(refine_peak(x, i));
    loop {
        let t = period_at(i);
        let lo = i + (0.8 * t).floor().max(1.0) as usize;
        let hi = i + (1.2 * t).ceil() as usize + 1;
        if hi > end {
            break;
        }
        let next = argmax(x, lo, hi);
        if x[next] <= 0.0 {
            break;
        }
        pulses.push(refine_peak(x, next));
        i = next;
    }
    pulses
}

/// Mean absolute difference of consecutive periods over the mean period.
/// `None` with fewer than [`MIN_PERIODS`] periods.
pub fn jitter_local(pulses: &[Pulse]) -> Option<f64> {
    if pulses.len() < MIN_PERIODS + 1 {
        return None;
    }
    let periods: Vec<f64> = pulses.windows(2).map(|w| w[1].pos - w[0].pos).collect();
    let mean_period = periods.iter().sum::<f64>() / periods.len() as f64;
    if mean_period <= 0.0 {
        return None;
    }
    let diffs: f64 = periods.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Some(diffs / (periods.len() - 1) as f64 / mean_period)
}

/// Mean absolute dB ratio of consecutive peak amplitudes.
pub fn shimmer_local_db(pulses: &[Pulse]) -> Option<f64> {
    if pulses.len() < MIN_PERIODS + 1 {
        return None;
    }
    let sum: f64 = pulses.windows(2).map(|w| (20.0 * (w[1].amp / w[0].amp).log10()).abs()).sum();
    Some(sum / (pulses.len() - 1) as f64)
}

pub const HNR_MIN_DB: f64 = -20.0;
pub const HNR_MAX_DB: f64 = 40.0;

/// Harmonics-to-noise ratio from the normalized autocorrelation peak `r`.
pub fn hnr_db(r: f64) -> f64 {
    if r <= 0.0 {
        return HNR_MIN_DB;
    }
    if r >= 1.0 {
        return HNR_MAX_DB;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(HNR_MIN_DB, HNR_MAX_DB)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pulses_of_a_sine() {
        let period = 16_000.0 / 220.0;
        let x: Vec<f64> = (0..8000).map(|i| 0.8 * (2.0 * PI * i as f64 / period).sin()).collect();
        let p = mark_pulses(&x, 0, x.len(), |_| period);
        assert!(p.len() > 100);
        for w in p.windows(2) {
            assert!((w[1].pos - w[0].pos - period).abs() < 1e-2);
        }
        assert!(jitter_local(&p).unwrap() < 1e-4);
        assert!(shimmer_local_db(&p).unwrap() < 1e-3);
    }

    #[test]
    fn known_perturbation() {
        // periods alternate 100, 110 → mean |dT| = 10, mean T = 105
        let mut pos = 0.0;
        let mut p = Vec::new();
        for k in 0..9 {
            p.push(Pulse { pos, amp: if k % 2 == 0 { 1.0 } else { 0.5 } });
            pos += if k % 2 == 0 { 100.0 } else { 110.0 };
        }
        let j = jitter_local(&p).unwrap();
        assert!((j - 10.0 / 105.0).abs() < 1e-12);
        let s = shimmer_local_db(&p).unwrap();
        assert!((s - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn too_few_periods() {
        let p: Vec<Pulse> = (0..3).map(|k| Pulse { pos: k as f64 * 50.0, amp: 1.0 }).collect();
        assert_eq!(jitter_local(&p), None);
        assert_eq!(shimmer_local_db(&p), None);
    }

    #[test]
    fn hnr_bounds() {
        assert_eq!(hnr_db(0.5), 0.0);
        assert_eq!(hnr_db(1.0), HNR_MAX_DB);
        assert_eq!(hnr_db(-0.3), HNR_MIN_DB);
        assert_eq!(hnr_db(0.999_999_999), HNR_MAX_DB);
        assert!((hnr_db(0.9) - 10.0 * 9f64.log10()).abs() < 1e-12);
    }
}
