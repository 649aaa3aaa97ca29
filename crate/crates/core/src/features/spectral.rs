//! Spectral descriptors of a Hamming-windowed frame: band energies and
//! balance, slopes, centroid, flux and MFCCs.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

pub const N_MEL_FILTERS: usize = 26;
pub const N_MFCC: usize = 13;
const EPS: f64 = 1e-20;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectralFrame {
    pub alpha_ratio_db: f64,
    pub hammarberg_db: f64,
    pub slope_0_500: f64,
    pub slope_500_1500: f64,
    pub centroid_hz: f64,
    pub flux: f64,
    pub mfcc: [f64; N_MFCC],
}

pub struct SpectralAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    n_fft: usize,
    rate: f64,
    /// Triangular mel filters as (first bin, weights).
    mel: Vec<(usize, Vec<f64>)>,
    dct: Vec<[f64; N_MEL_FILTERS]>,
}

impl SpectralAnalyzer {
    pub fn new(win: usize, sample_rate: u32) -> Self {
        let n_fft = win.next_power_of_two();
        let rate = sample_rate as f64;
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        let mel = mel_filters(n_fft, rate, 20.0, (rate / 2.0).min(8000.0));
        let m = N_MEL_FILTERS as f64;
        let dct = (1..=N_MFCC)
            .map(|k| {
                let mut row = [0.0; N_MEL_FILTERS];
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (2.0 / m).sqrt() * (PI * k as f64 * (j as f64 + 0.5) / m).cos();
                }
                row
            })
            .collect();
        Self { fft, n_fft, rate, mel, dct }
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.rate / self.n_fft as f64
    }

    /// Magnitude spectrum (bins `0..=n_fft/2`) of an already windowed frame.
    pub fn magnitudes(&self, windowed: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = windowed.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.n_fft, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf[..=self.n_fft / 2].iter().map(|c| c.norm()).collect()
    }

    fn band(&self, lo_hz: f64, hi_hz: f64) -> impl Iterator<Item = usize> + '_ {
        (0..=self.n_fft / 2).filter(move |&k| {
            let f = self.bin_hz(k);
            f >= lo_hz && f < hi_hz
        })
    }

    fn band_energy(&self, power: &[f64], lo: f64, hi: f64) -> f64 {
        self.band(lo, hi).map(|k| power[k]).sum()
    }

    fn band_max(&self, mag: &[f64], lo: f64, hi: f64) -> f64 {
        self.band(lo, hi).map(|k| mag[k]).fold(0.0, f64::max)
    }

    /// Least-squares slope of the dB magnitude against frequency (dB/Hz).
    fn slope(&self, mag: &[f64], lo: f64, hi: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .band(lo, hi + 1e-9)
            .map(|k| (self.bin_hz(k), 20.0 * (mag[k] + EPS).log10()))
            .collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    /// Descriptors of one frame. `prev` is the previous frame's normalized
    /// magnitude spectrum (for flux); the current one is returned alongside.
    pub fn analyze(&self, windowed: &[f64], prev: Option<&[f64]>) -> (SpectralFrame, Vec<f64>) {
        let mag = self.magnitudes(windowed);
        let power: Vec<f64> = mag.iter().map(|m| m * m).collect();

        let alpha_ratio_db =
            10.0 * ((self.band_energy(&power, 50.0, 1000.0) + EPS) / (self.band_energy(&power, 1000.0, 5000.0) + EPS)).log10();
        let hammarberg_db =
            20.0 * ((self.band_max(&mag, 0.0, 2000.0) + EPS) / (self.band_max(&mag, 2000.0, 5000.0) + EPS)).log10();

        let total_power: f64 = power.iter().sum();
        let centroid_hz = if total_power > 0.0 {
            power.iter().enumerate().map(|(k, p)| self.bin_hz(k) * p).sum::<f64>() / total_power
        } else {
            0.0
        };

        let mag_sum: f64 = mag.iter().sum();
        let norm: Vec<f64> = if mag_sum > 0.0 { mag.iter().map(|m| m / mag_sum).collect() } else { vec![0.0; mag.len()] };
        let flux = prev.map_or(0.0, |p| norm.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum());

        let log_mel: Vec<f64> = self
            .mel
            .iter()
            .map(|(start, w)| {
                let e: f64 = w.iter().enumerate().map(|(j, wj)| wj * power[start + j]).sum();
                (e + 1e-12).ln()
            })
            .collect();
        let mut mfcc = [0.0; N_MFCC];
        for (c, row) in mfcc.iter_mut().zip(&self.dct) {
            *c = row.iter().zip(&log_mel).map(|(a, b)| a * b).sum();
        }

        let frame = SpectralFrame {
            alpha_ratio_db,
            hammarberg_db,
            slope_0_500: self.slope(&mag, 0.0, 500.0),
            slope_500_1500: self.slope(&mag, 500.0, 1500.0),
            centroid_hz,
            flux,
            mfcc,
        };
        (frame, norm)
    }
}

/// HTK-style triangular filters, equally spaced on the mel scale.
fn mel_filters(n_fft: usize, rate: f64, lo_hz: f64, hi_hz: f64) -> Vec<(usize, Vec<f64>)> {
    let (lo, hi) = (hz_to_mel(lo_hz), hz_to_mel(hi_hz));
    let edges: Vec<f64> = (0..N_MEL_FILTERS + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (N_MEL_FILTERS + 1) as f64))
        .collect();
    let bin_hz = rate / n_fft as f64;
    (0..N_MEL_FILTERS)
        .map(|m| {
            let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
            let first = (l / bin_hz).ceil() as usize;
            let last = ((r / bin_hz).floor() as usize).min(n_fft / 2);
            let w = (first..=last)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= c {
                        ((f - l) / (c - l)).max(0.0)
                    } else {
                        ((r - f) / (r - c)).max(0.0)
                    }
                })
                .collect();
            (first, w)
        })
        .collect()
}

/// Zero-crossing rate of a raw frame: sign changes per sample pair.
pub fn zero_crossing_rate(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let changes = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    changes as f64 / (x.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::framing::hamming;

    fn windowed_tone(freq: f64) -> Vec<f64> {
        let w = hamming(400);
        (0..400).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 16_000.0).sin() * w[i]).collect()
    }

    /// Band energies by direct DFT sums, independent of the FFT path.
    fn direct_band_energy(x: &[f64], n_fft: usize, lo: f64, hi: f64) -> f64 {
        (0..=n_fft / 2)
            .filter(|&k| {
                let f = k as f64 * 16_000.0 / n_fft as f64;
                f >= lo && f < hi
            })
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .sum()
    }

    #[test]
    fn alpha_ratio_sign_follows_band_energy() {
        let an = SpectralAnalyzer::new(400, 16_000);
        for (freq, positive) in [(220.0, true), (4000.0, false)] {
            let x = windowed_tone(freq);
            let (sf, _) = an.analyze(&x, None);
            let lo = direct_band_energy(&x, 512, 50.0, 1000.0);
            let hi = direct_band_energy(&x, 512, 1000.0, 5000.0);
            let oracle = 10.0 * ((lo + EPS) / (hi + EPS)).log10();
            assert!((sf.alpha_ratio_db - oracle).abs() < 1e-6, "{freq}: {} vs {oracle}", sf.alpha_ratio_db);
            assert_eq!(sf.alpha_ratio_db > 0.0, positive);
        }
    }

    #[test]
    fn centroid_and_hammarberg() {
        let an = SpectralAnalyzer::new(400, 16_000);
        let (low, n1) = an.analyze(&windowed_tone(500.0), None);
        let (high, _) = an.analyze(&windowed_tone(3000.0), Some(&n1));
        assert!((low.centroid_hz - 500.0).abs() < 40.0);
        assert!((high.centroid_hz - 3000.0).abs() < 40.0);
        assert!(low.hammarberg_db > 20.0);
        assert!(high.hammarberg_db < -20.0);
        assert_eq!(low.flux, 0.0);
        assert!(high.flux > 0.0);
    }

    #[test]
    fn mfcc_ignores_gain() {
        let an = SpectralAnalyzer::new(400, 16_000);
        let x = windowed_tone(700.0);
        let y: Vec<f64> = x.iter().map(|v| v * 0.25).collect();
        let (a, _) = an.analyze(&x, None);
        let (b, _) = an.analyze(&y, None);
        for k in 0..N_MFCC {
            assert!((a.mfcc[k] - b.mfcc[k]).abs() < 1e-6, "c{}", k + 1);
        }
    }

    #[test]
    fn mel_round_trip_and_filters() {
        for hz in [0.0, 440.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        let f = mel_filters(512, 16_000.0, 20.0, 8000.0);
        assert_eq!(f.len(), N_MEL_FILTERS);
        assert!(f.iter().all(|(_, w)| w.iter().any(|&v| v > 0.0)));
    }

    #[test]
    fn zcr() {
        assert_eq!(zero_crossing_rate(&[1.0, -1.0, 1.0, -1.0, 1.0]), 1.0);
        assert_eq!(zero_crossing_rate(&[1.0, 1.0, 1.0]), 0.0);
    }
}
