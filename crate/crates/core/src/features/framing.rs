use std::f64::consts::PI;

use crate::audio::AudioClip;

use super::FeatureError;

/// Fixed-size analysis frames cut from a mono signal.
#[derive(Debug, Clone)]
pub struct FrameSeries {
    frames: Vec<Vec<f64>>,
    win: usize,
    hop: usize,
    sample_rate: u32,
}

pub(crate) fn ms_to_samples(ms: f64, rate: u32) -> usize {
    (ms * rate as f64 / 1000.0).round() as usize
}

/// `floor((n - win) / hop) + 1` for `n >= win`, zero otherwise.
pub fn frame_count(n: usize, win: usize, hop: usize) -> usize {
    if n < win || win == 0 || hop == 0 {
        return 0;
    }
    (n - win) / hop + 1
}

/// Cuts `clip` into frames of `win_ms` every `hop_ms`.
pub fn frame_signal(clip: &AudioClip, win_ms: f64, hop_ms: f64) -> Result<FrameSeries, FeatureError> {
    if clip.channels() != 1 {
        return Err(FeatureError::NotMono);
    }
    let rate = clip.sample_rate();
    let win = ms_to_samples(win_ms, rate);
    let hop = ms_to_samples(hop_ms, rate);
    if win == 0 || hop == 0 {
        return Err(FeatureError::InvalidConfig(format!("win {win_ms} ms / hop {hop_ms} ms")));
    }
    FrameSeries::from_samples(clip.samples(), win, hop, rate)
}

impl FrameSeries {
    pub fn from_samples(x: &[f64], win: usize, hop: usize, sample_rate: u32) -> Result<Self, FeatureError> {
        let count = frame_count(x.len(), win, hop);
        if count == 0 {
            return Err(FeatureError::TooShort { samples: x.len(), needed: win });
        }
        let frames = (0..count).map(|i| x[i * hop..i * hop + win].to_vec()).collect();
        Ok(Self { frames, win, hop, sample_rate })
    }

    /// `count` frames of length `win` whose centres coincide with the centres
    /// of the frames `[i*hop, i*hop + centre_win)`. Samples outside the
    /// signal are zero.
    pub fn centered(x: &[f64], count: usize, centre_win: usize, win: usize, hop: usize, sample_rate: u32) -> Self {
        let frames = (0..count)
            .map(|i| {
                let centre = (i * hop) as i64 + (centre_win / 2) as i64;
                let start = centre - (win / 2) as i64;
                (0..win as i64)
                    .map(|j| {
                        let k = start + j;
                        if k >= 0 && (k as usize) < x.len() {
                            x[k as usize]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { frames, win, hop, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn win(&self) -> usize {
        self.win
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn hop_secs(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    /// Raw (unwindowed) frame.
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.frames[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.frames.iter().map(Vec::as_slice)
    }

    /// Frame `i` multiplied by a Hamming window.
    pub fn windowed(&self, i: usize) -> Vec<f64> {
        let w = hamming(self.win);
        self.frames[i].iter().zip(&w).map(|(x, w)| x * w).collect()
    }
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_second_at_16k() {
        let clip = AudioClip::mono(vec![0.1; 16_000], 16_000).unwrap();
        let f = frame_signal(&clip, 25.0, 10.0).unwrap();
        assert_eq!(f.len(), 98);
        assert_eq!(f.win(), 400);
        assert!(f.iter().all(|fr| fr.len() == 400));
    }

    #[test]
    fn too_short() {
        let clip = AudioClip::mono(vec![0.1; 399], 16_000).unwrap();
        assert!(matches!(frame_signal(&clip, 25.0, 10.0), Err(FeatureError::TooShort { .. })));
    }

    #[test]
    fn tiling_when_hop_equals_win() {
        let clip = AudioClip::mono((0..4000).map(|i| i as f64).collect(), 16_000).unwrap();
        let f = frame_signal(&clip, 25.0, 25.0).unwrap();
        assert_eq!(f.len(), 10);
        let joined: Vec<f64> = f.iter().flatten().copied().collect();
        assert_eq!(joined, clip.samples());
    }

    #[test]
    fn centered_frames_share_centres() {
        let x: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let f = FrameSeries::centered(&x, 3, 400, 960, 160, 16_000);
        // centre of frame 1 is 160 + 200 = 360
        assert_eq!(f.frame(1)[480], 360.0);
        assert_eq!(f.frame(0)[0], 0.0);
    }

    proptest! {
        #[test]
        fn count_formula(n in 1usize..5000, win in 1usize..600, hop in 1usize..600) {
            let x = vec![0.0; n];
            match FrameSeries::from_samples(&x, win, hop, 16_000) {
                Ok(f) => {
                    prop_assert!(n >= win);
                    prop_assert_eq!(f.len(), (n - win) / hop + 1);
                    // the next frame would overrun
                    prop_assert!(f.len() * hop + win > n);
                }
                Err(_) => prop_assert!(n < win),
            }
        }
    }
}
