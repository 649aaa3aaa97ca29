//! Fundamental-frequency tracking by normalized autocorrelation.
//!
//! For a frame `x` of length `W` and lag `t`:
//!
//! ```text
//! r(t) = sum_n x[n] x[n+t] / sqrt(E_head(t) * E_tail(t))
//! ```
//!
//! where the energies cover the two overlapping segments, so `r` is
//! independent of the frame gain. The cross products come from an FFT.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::framing::FrameSeries;
use super::FeatureError;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub voicing_threshold: f64,
    /// A shorter-lag peak replaces the global maximum when it reaches this
    /// fraction of it (octave-error guard).
    pub octave_ratio: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self { f_min: 60.0, f_max: 500.0, voicing_threshold: 0.45, octave_ratio: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    /// Hz; exactly 0 on unvoiced frames.
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Normalized autocorrelation at the selected lag, in [0, 1].
    pub strength: Vec<f64>,
}

pub(crate) struct Autocorrelator {
    win: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Autocorrelator {
    pub(crate) fn new(win: usize) -> Self {
        let n = (2 * win).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self { win, fft: planner.plan_fft_forward(n), ifft: planner.plan_fft_inverse(n), n }
    }

    /// Normalized autocorrelation for lags `0..=max_lag`.
    pub(crate) fn normalized(&self, x: &[f64], max_lag: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.win);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.n, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;

        let mut prefix = Vec::with_capacity(x.len() + 1);
        prefix.push(0.0);
        for &v in x {
            prefix.push(prefix.last().unwrap() + v * v);
        }
        let total = prefix[x.len()];
        (0..=max_lag.min(x.len() - 1))
            .map(|t| {
                let head = prefix[x.len() - t];
                let tail = total - prefix[t];
                let denom = (head * tail).sqrt();
                if denom <= total * 1e-12 || denom == 0.0 {
                    0.0
                } else {
                    (buf[t].re * scale / denom).clamp(-1.0, 1.0)
                }
            })
            .collect()
    }
}

/// Result of the lag search on one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LagPeak {
    pub lag: f64,
    pub strength: f64,
}

/// Best lag in `[min_lag, max_lag]` of a normalized autocorrelation, refined
/// by a parabola through the peak and its neighbours.
pub(crate) fn pick_lag(r: &[f64], min_lag: usize, max_lag: usize, octave_ratio: f64) -> Option<LagPeak> {
    let lo = min_lag.max(1);
    let hi = max_lag.min(r.len().saturating_sub(2));
    if lo > hi {
        return None;
    }
    let peaks: Vec<usize> = (lo..=hi).filter(|&t| r[t] > r[t - 1] && r[t] >= r[t + 1] && r[t] > 0.0).collect();
    let best = peaks.iter().map(|&t| r[t]).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let t = peaks.into_iter().find(|&t| r[t] >= octave_ratio * best)?;
    let (a, b, c) = (r[t - 1], r[t], r[t + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let strength = (b - 0.25 * (a - c) * delta).clamp(0.0, 1.0);
    Some(LagPeak { lag: t as f64 + delta, strength })
}

/// Per-frame f0 and voicing decision.
pub fn detect_f0_track(frames: &FrameSeries, cfg: &PitchConfig) -> Result<PitchTrack, FeatureError> {
    if !(cfg.f_min > 0.0 && cfg.f_max > cfg.f_min) {
        return Err(FeatureError::InvalidConfig(format!("pitch range {}..{}", cfg.f_min, cfg.f_max)));
    }
    let rate = frames.sample_rate() as f64;
    let min_lag = (rate / cfg.f_max).floor() as usize;
    let max_lag = (rate / cfg.f_min).ceil() as usize;
    let needed = (2.0 * rate / cfg.f_min).ceil() as usize;
    if frames.win() < needed {
        return Err(FeatureError::InvalidConfig(format!(
            "pitch frame of {} samples is shorter than two periods of {} Hz",
            frames.win(),
            cfg.f_min
        )));
    }
    let ac = Autocorrelator::new(frames.win());
    let mut track = PitchTrack {
        f0: Vec::with_capacity(frames.len()),
        voiced: Vec::with_capacity(frames.len()),
        strength: Vec::with_capacity(frames.len()),
    };
    for frame in frames.iter() {
        let r = ac.normalized(frame, max_lag + 1);
        let peak = pick_lag(&r, min_lag, max_lag, cfg.octave_ratio);
        let strength = peak.map_or(0.0, |p| p.strength);
        match peak {
            Some(p) if p.strength >= cfg.voicing_threshold => {
                let f0 = rate / p.lag;
                let in_range = f0 >= cfg.f_min * 0.95 && f0 <= cfg.f_max * 1.05;
                track.f0.push(if in_range { f0 } else { 0.0 });
                track.voiced.push(in_range);
            }
            _ => {
                track.f0.push(0.0);
                track.voiced.push(false);
            }
        }
        track.strength.push(strength);
    }
    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn frames_of(x: &[f64]) -> FrameSeries {
        FrameSeries::from_samples(x, 960, 160, 16_000).unwrap()
    }

    fn sine(freq: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.7 * (2.0 * PI * freq * i as f64 / 16_000.0).sin()).collect()
    }

    #[test]
    fn direct_autocorrelation_matches_fft() {
        let x: Vec<f64> = (0..960).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let r = Autocorrelator::new(960).normalized(&x, 300);
        for t in [0usize, 1, 50, 133, 300] {
            let c: f64 = (0..960 - t).map(|n| x[n] * x[n + t]).sum();
            let h: f64 = x[..960 - t].iter().map(|v| v * v).sum();
            let e: f64 = x[t..].iter().map(|v| v * v).sum();
            assert!((r[t] - c / (h * e).sqrt()).abs() < 1e-10, "lag {t}");
        }
    }

    #[test]
    fn sine_220() {
        let fr = frames_of(&sine(220.0, 16_000));
        let tr = detect_f0_track(&fr, &PitchConfig::default()).unwrap();
        for i in 1..fr.len() - 1 {
            assert!(tr.voiced[i]);
            assert!((tr.f0[i] - 220.0).abs() <= 2.0, "frame {i}: {}", tr.f0[i]);
        }
    }

    #[test]
    fn harmonic_tone_no_octave_error() {
        for f0 in [80.0, 130.0, 260.0, 410.0] {
            let x: Vec<f64> = (0..8000)
                .map(|i| {
                    let t = i as f64 / 16_000.0;
                    (1..=6).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum::<f64>() * 0.3
                })
                .collect();
            let tr = detect_f0_track(&frames_of(&x), &PitchConfig::default()).unwrap();
            let mid = tr.f0.len() / 2;
            assert!((tr.f0[mid] - f0).abs() < 2.0, "{f0}: {}", tr.f0[mid]);
        }
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let x: Vec<f64> = (0..32_000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let tr = detect_f0_track(&frames_of(&x), &PitchConfig::default()).unwrap();
        let frac = tr.voiced.iter().filter(|&&v| v).count() as f64 / tr.voiced.len() as f64;
        assert!(frac < 0.2, "voiced fraction {frac}");
    }

    #[test]
    fn zero_frame_unvoiced() {
        let tr = detect_f0_track(&frames_of(&vec![0.0; 2000]), &PitchConfig::default()).unwrap();
        assert!(tr.voiced.iter().all(|v| !v));
        assert!(tr.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn short_pitch_frames_rejected() {
        let fr = FrameSeries::from_samples(&sine(220.0, 4000), 400, 160, 16_000).unwrap();
        assert!(detect_f0_track(&fr, &PitchConfig::default()).is_err());
    }

    #[test]
    fn scaling_keeps_track() {
        let x = sine(173.0, 8000);
        let a = detect_f0_track(&frames_of(&x), &PitchConfig::default()).unwrap();
        let half: Vec<f64> = x.iter().map(|v| v * 0.5).collect();
        let b = detect_f0_track(&frames_of(&half), &PitchConfig::default()).unwrap();
        assert_eq!(a.voiced, b.voiced);
        assert_eq!(a.f0, b.f0);
    }
}
