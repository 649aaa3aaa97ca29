//! Audio loading and the standard preprocessing chain.
//!
//! Every clip goes through the same steps before feature extraction:
//! mono downmix, edge-silence trim, resampling to the target rate and peak
//! normalization. All steps are pure functions of their inputs.

mod resample;
mod trim;
mod wav;

use thiserror::Error;

pub use resample::{resample, KAISER_BETA, ZERO_CROSSINGS};
pub use trim::trim_silence;
pub use wav::{load_wav, write_wav, write_wav_pcm16};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("nothing left after trimming silence")]
    EmptyAfterTrim,
    #[error("expected a mono clip, got {0} channels")]
    NotMono(u16),
    #[error("invalid sample rate: {0}")]
    InvalidRate(i64),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AudioError {
    pub fn kind(&self) -> &'static str {
        match self {
            AudioError::FileNotFound(_) => "FileNotFound",
            AudioError::UnsupportedFormat(_) => "UnsupportedFormat",
            AudioError::CorruptHeader(_) => "CorruptHeader",
            AudioError::EmptyAfterTrim => "EmptyAfterTrim",
            AudioError::NotMono(_) => "NotMono",
            AudioError::InvalidRate(_) => "InvalidRate",
            AudioError::InvalidClip(_) => "InvalidClip",
            AudioError::Io { .. } => "Io",
        }
    }
}

/// A block of audio. Stereo samples are interleaved `L R L R ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    channels: u16,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32, channels: u16) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate(0));
        }
        if !(1..=2).contains(&channels) {
            return Err(AudioError::InvalidClip(format!("{channels} channels")));
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(AudioError::InvalidClip(format!(
                "{} samples not divisible by {channels} channels",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidClip(format!("non-finite sample at {i}")));
        }
        Ok(Self { samples, sample_rate, channels })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(samples, sample_rate, 1)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Frames per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub(crate) fn require_mono(&self) -> Result<(), AudioError> {
        if self.channels != 1 {
            return Err(AudioError::NotMono(self.channels));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub target_rate: u32,
    pub peak_target: f64,
    /// Trim threshold relative to the clip peak, in dB (negative).
    pub trim_threshold_db: f64,
    pub trim_frame_ms: f64,
    pub trim_hop_ms: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_rate: 16_000,
            peak_target: 0.99,
            trim_threshold_db: -40.0,
            trim_frame_ms: 25.0,
            trim_hop_ms: 10.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.target_rate == 0 {
            return Err(AudioError::InvalidRate(0));
        }
        if !(self.peak_target > 0.0 && self.peak_target <= 1.0) {
            return Err(AudioError::InvalidClip(format!("peak_target {}", self.peak_target)));
        }
        if !(self.trim_threshold_db < 0.0) {
            return Err(AudioError::InvalidClip(format!(
                "trim_threshold_db {} must be negative",
                self.trim_threshold_db
            )));
        }
        if !(self.trim_frame_ms > 0.0 && self.trim_hop_ms > 0.0) {
            return Err(AudioError::InvalidClip("trim frame/hop must be positive".into()));
        }
        Ok(())
    }
}

/// Averages interleaved channels into one.
pub fn downmix(clip: &AudioClip) -> AudioClip {
    if clip.channels == 1 {
        return clip.clone();
    }
    let ch = clip.channels as usize;
    let samples = clip
        .samples
        .chunks_exact(ch)
        .map(|frame| frame.iter().sum::<f64>() / ch as f64)
        .collect();
    AudioClip { samples, sample_rate: clip.sample_rate, channels: 1 }
}

/// Scales the clip so that its largest absolute sample equals `peak_target`.
pub fn normalize_peak(clip: &AudioClip, peak_target: f64) -> Result<AudioClip, AudioError> {
    let peak = clip.peak();
    if peak == 0.0 {
        return Err(AudioError::EmptyAfterTrim);
    }
    let gain = peak_target / peak;
    let samples = clip.samples.iter().map(|s| s * gain).collect();
    Ok(AudioClip { samples, ..*clip })
}

/// Downmix, trim, resample, normalize, in that order.
pub fn preprocess(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<AudioClip, AudioError> {
    cfg.validate()?;
    let mono = downmix(clip);
    let trimmed = trim_silence(&mono, cfg)?;
    let resampled = resample(&trimmed, cfg.target_rate as i64)?;
    normalize_peak(&resampled, cfg.peak_target)
}
