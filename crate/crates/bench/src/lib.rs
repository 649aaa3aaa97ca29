//! Deterministic inputs shared by the benchmarks.

use std::f64::consts::PI;

use xcorpus_core::learners::Matrix;
use xcorpus_core::AudioClip;

/// Harmonic tone with a slow amplitude wobble.
pub fn voiced_clip(f0: f64, secs: f64, rate: u32) -> AudioClip {
    let n = (secs * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let env = 0.8 + 0.2 * (2.0 * PI * 3.0 * t).sin();
            env * (1..=4).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum::<f64>() * 0.3
        })
        .collect();
    AudioClip::mono(samples, rate).expect("valid clip")
}

/// Two Gaussian-ish clouds built from a fixed LCG, with labels.
pub fn two_clouds(n: usize, d: usize) -> (Matrix, Vec<usize>) {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        for j in 0..d {
            let shift = if j < 4 { label as f64 - 0.5 } else { 0.0 };
            data.push(shift + next());
        }
        y.push(label);
    }
    (Matrix::new(n, d, data).expect("shape"), y)
}
