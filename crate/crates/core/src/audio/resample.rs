//! Band-limited sample-rate conversion.
//!
//! Kernel: `h(x) = r * sinc(r * x) * kaiser(x / half_width)` with
//! `r = min(1, target / source)`, Kaiser beta 8.6 and 64 zero crossings in
//! total (32 on each side of the centre tap), so `half_width = 32 / r` input
//! samples. When the reduced ratio `target:source = L:M` has a small `L`, the
//! kernel is tabulated once per output phase (polyphase); otherwise it is
//! evaluated per output sample. Both paths compute the same values.

use super::{AudioClip, AudioError};

pub const KAISER_BETA: f64 = 8.6;
pub const ZERO_CROSSINGS: usize = 64;
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            half_width: (ZERO_CROSSINGS / 2) as f64 / cutoff,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = x / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let arg = std::f64::consts::PI * self.cutoff * x;
        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
        let window = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / self.i0_beta;
        self.cutoff * sinc * window
    }
}

/// Resamples a mono clip to `target_rate`. The output holds
/// `round(len * target / source)` samples; an equal rate returns the input
/// unchanged.
pub fn resample(clip: &AudioClip, target_rate: i64) -> Result<AudioClip, AudioError> {
    resample_impl(clip, target_rate, MAX_TABLE_PHASES)
}

fn resample_impl(clip: &AudioClip, target_rate: i64, max_phases: u64) -> Result<AudioClip, AudioError> {
    clip.require_mono()?;
    if target_rate <= 0 || target_rate > u32::MAX as i64 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    let src = clip.sample_rate() as u64;
    let dst = target_rate as u64;
    if src == dst {
        return Ok(clip.clone());
    }
    let x = clip.samples();
    let n_in = x.len() as u64;
    let n_out = ((n_in as u128 * dst as u128 * 2 + src as u128) / (2 * src as u128)) as usize;

    let g = gcd(src, dst);
    let up = dst / g; // L
    let down = src / g; // M
    let kernel = Kernel::new((dst as f64 / src as f64).min(1.0));
    let reach = kernel.half_width.ceil() as i64;
    let taps = (2 * reach + 1) as usize;

    // Output sample n sits at input position n*M/L = base + phase/L.
    let table: Option<Vec<f64>> = (up <= max_phases).then(|| {
        let mut t = Vec::with_capacity(up as usize * taps);
        for phase in 0..up {
            let frac = phase as f64 / up as f64;
            for j in -reach..=reach {
                t.push(kernel.eval(j as f64 - frac));
            }
        }
        t
    });

    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let frac = phase as f64 / up as f64;
        let mut acc = 0.0;
        for (k, j) in (-reach..=reach).enumerate() {
            let idx = base + j;
            if idx < 0 || idx >= n_in as i64 {
                continue;
            }
            let w = match &table {
                Some(t) => t[phase as usize * taps + k],
                None => kernel.eval(j as f64 - frac),
            };
            acc += w * x[idx as usize];
        }
        out.push(acc);
    }
    AudioClip::mono(out, dst as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};
    use std::f64::consts::PI;

    fn tone(freq: f64, rate: u32, secs: f64) -> AudioClip {
        let n = (rate as f64 * secs).round() as usize;
        AudioClip::mono(
            (0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect(),
            rate,
        )
        .unwrap()
    }

    /// Frequency of the largest FFT bin, refined by parabolic interpolation
    /// on log magnitudes of a Hann-windowed buffer.
    fn fft_peak_hz(x: &[f64], rate: f64) -> f64 {
        let n = x.len();
        let mut buf: Vec<Complex<f64>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                Complex::new(v * w, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mags: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm().max(1e-300).ln()).collect();
        let k = (1..n / 2 - 1).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
        let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
        let delta = 0.5 * (a - c) / (a - 2.0 * b + c);
        (k as f64 + delta) * rate / n as f64
    }

    #[test]
    fn preserves_duration() {
        let out = resample(&tone(440.0, 44_100, 1.0), 16_000).unwrap();
        assert_eq!(out.len(), 16_000);
        assert_eq!(out.sample_rate(), 16_000);
        let out = resample(&tone(440.0, 8_000, 0.5), 16_000).unwrap();
        assert_eq!(out.len(), 8_000);
    }

    #[test]
    fn tone_frequency_preserved() {
        let out = resample(&tone(440.0, 44_100, 1.0), 16_000).unwrap();
        let f = fft_peak_hz(out.samples(), 16_000.0);
        assert!((f - 440.0).abs() <= 1.0, "peak at {f}");
        let out = resample(&tone(1000.0, 8_000, 1.0), 16_000).unwrap();
        let f = fft_peak_hz(out.samples(), 16_000.0);
        assert!((f - 1000.0).abs() <= 1.0, "peak at {f}");
    }

    #[test]
    fn identity_rate() {
        let c = tone(300.0, 16_000, 0.1);
        assert_eq!(resample(&c, 16_000).unwrap(), c);
    }

    #[test]
    fn invalid_rate() {
        let c = tone(300.0, 16_000, 0.1);
        assert!(matches!(resample(&c, 0), Err(AudioError::InvalidRate(0))));
        assert!(matches!(resample(&c, -5), Err(AudioError::InvalidRate(-5))));
    }

    #[test]
    fn table_and_direct_paths_agree() {
        let c = tone(440.0, 44_100, 0.2);
        let table = resample_impl(&c, 16_000, MAX_TABLE_PHASES).unwrap();
        let direct = resample_impl(&c, 16_000, 0).unwrap();
        assert_eq!(table, direct);
        // a large reduced ratio always takes the direct path
        let out = resample(&c, 16_001).unwrap();
        assert_eq!(out.len(), (0.2f64 * 44_100.0 * 16_001.0 / 44_100.0).round() as usize);
    }

    #[test]
    fn suppresses_content_above_new_nyquist() {
        // 12 kHz at 44.1 kHz must not alias into the 16 kHz output
        let out = resample(&tone(12_000.0, 44_100, 0.5), 16_000).unwrap();
        let mid = &out.samples()[1000..7000];
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        assert!(rms < 1e-3, "rms {rms}");
    }

    #[test]
    fn bessel_reference_values() {
        // I0(1) and I0(8.6) from tables
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
    }
}
