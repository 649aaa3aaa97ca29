//! Frame-level low-level descriptors (LLDs) and utterance-level feature
//! vectors built from them.
//!
//! Two presets share the same LLD extractor:
//!
//! * `compact`: 85 curated channel/functional pairs plus three durational
//!   features, 88 values in total.
//! * `brute`: every functional of [`FunctionalBank::full`] over every LLD
//!   channel and its first difference, plus the durational features:
//!   `2 * 27 * 41 + 3 = 2217` values.

mod framing;
mod functionals;
mod pitch;
mod presets;
mod spectral;
mod voice;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioClip;

pub use framing::{frame_count, frame_signal, hamming, FrameSeries};
pub use functionals::{percentile, Contour, Functional, FunctionalBank};
pub use pitch::{detect_f0_track, PitchConfig, PitchTrack};
pub use presets::{preset_descriptor, BRUTE_DIM, COMPACT_DIM, COMPACT_PAIRS, DURATIONAL};
pub use spectral::{SpectralAnalyzer, SpectralFrame, N_MEL_FILTERS, N_MFCC};
pub use voice::{hnr_db, jitter_local, mark_pulses, shimmer_local_db, Pulse, HNR_MAX_DB, HNR_MIN_DB, MIN_PERIODS};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("clip too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },
    #[error("expected a mono clip")]
    NotMono,
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite feature {name}")]
    NotFinite { name: String },
}

impl FeatureError {
    pub fn kind(&self) -> &'static str {
        match self {
            FeatureError::TooShort { .. } => "TooShort",
            FeatureError::NotMono => "NotMono",
            FeatureError::UnknownPreset(_) => "UnknownPreset",
            FeatureError::InvalidConfig(_) => "InvalidConfig",
            FeatureError::NotFinite { .. } => "NotFinite",
        }
    }
}

macro_rules! lld_channels {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// LLD channels, in matrix row order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Lld { $($variant),* }

        impl Lld {
            pub const ALL: &'static [Lld] = &[$(Lld::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Lld::$variant => $name),* }
            }
        }
    };
}

lld_channels! {
    F0Hz => "f0_hz",
    VoicingProb => "voicing_prob",
    RmsEnergy => "rms_energy",
    LogEnergy => "log_energy",
    JitterLocal => "jitter_local",
    ShimmerLocalDb => "shimmer_local_db",
    HnrDb => "hnr_db",
    AlphaRatioDb => "alpha_ratio_db",
    HammarbergDb => "hammarberg_db",
    SpectralSlope0_500 => "spectral_slope_0_500",
    SpectralSlope500_1500 => "spectral_slope_500_1500",
    SpectralCentroidHz => "spectral_centroid_hz",
    SpectralFlux => "spectral_flux",
    Zcr => "zcr",
    Mfcc1 => "mfcc_1",
    Mfcc2 => "mfcc_2",
    Mfcc3 => "mfcc_3",
    Mfcc4 => "mfcc_4",
    Mfcc5 => "mfcc_5",
    Mfcc6 => "mfcc_6",
    Mfcc7 => "mfcc_7",
    Mfcc8 => "mfcc_8",
    Mfcc9 => "mfcc_9",
    Mfcc10 => "mfcc_10",
    Mfcc11 => "mfcc_11",
    Mfcc12 => "mfcc_12",
    Mfcc13 => "mfcc_13",
}

/// Which frames a channel's functionals see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDomain {
    All,
    Voiced,
    /// Voiced frames where enough pitch periods were marked.
    Periods,
}

impl Lld {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn domain(self) -> FrameDomain {
        match self {
            Lld::F0Hz | Lld::HnrDb => FrameDomain::Voiced,
            Lld::JitterLocal | Lld::ShimmerLocalDb => FrameDomain::Periods,
            _ => FrameDomain::All,
        }
    }

    fn mfcc(k: usize) -> Lld {
        Lld::ALL[Lld::Mfcc1.index() + k]
    }
}

pub const N_LLD: usize = 27;

/// Analysis settings for [`extract_llds`].
#[derive(Debug, Clone, PartialEq)]
pub struct LldConfig {
    pub win_ms: f64,
    pub hop_ms: f64,
    /// Pitch frames are longer than spectral frames (two periods of the
    /// lowest f0 must fit) and share their centres.
    pub pitch_win_ms: f64,
    pub pitch: PitchConfig,
}

impl Default for LldConfig {
    fn default() -> Self {
        Self { win_ms: 25.0, hop_ms: 10.0, pitch_win_ms: 60.0, pitch: PitchConfig::default() }
    }
}

/// Per-frame descriptors, one row per [`Lld`] channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    values: Vec<Vec<f64>>,
    voiced_mask: Vec<bool>,
    period_mask: Vec<bool>,
    hop_secs: f64,
    duration_secs: f64,
}

impl LldMatrix {
    pub fn frames(&self) -> usize {
        self.voiced_mask.len()
    }

    pub fn channel(&self, ch: Lld) -> &[f64] {
        &self.values[ch.index()]
    }

    pub fn voiced_mask(&self) -> &[bool] {
        &self.voiced_mask
    }

    pub fn period_mask(&self) -> &[bool] {
        &self.period_mask
    }

    pub fn hop_secs(&self) -> f64 {
        self.hop_secs
    }

    pub fn duration_secs(&self) -> f64 {
        self.duration_secs
    }

    /// Builds a matrix from raw rows (mainly for tests and external LLDs).
    pub fn from_rows(
        values: Vec<Vec<f64>>,
        voiced_mask: Vec<bool>,
        hop_secs: f64,
        duration_secs: f64,
    ) -> Result<Self, FeatureError> {
        let n = voiced_mask.len();
        if values.len() != N_LLD || values.iter().any(|r| r.len() != n) {
            return Err(FeatureError::InvalidConfig("LLD rows do not match channel/frame counts".into()));
        }
        if n == 0 {
            return Err(FeatureError::TooShort { samples: 0, needed: 1 });
        }
        let period_mask = voiced_mask.clone();
        Ok(Self { values, voiced_mask, period_mask, hop_secs, duration_secs })
    }

    /// The contour a channel's functionals are computed over.
    pub fn contour(&self, ch: Lld) -> Contour {
        let row = self.channel(ch);
        match ch.domain() {
            FrameDomain::All => Contour::single(row.to_vec(), self.hop_secs),
            FrameDomain::Voiced => Contour::masked(row, &self.voiced_mask, self.hop_secs),
            FrameDomain::Periods => Contour::masked(row, &self.period_mask, self.hop_secs),
        }
    }

    pub fn voiced_fraction(&self) -> f64 {
        self.voiced_mask.iter().filter(|&&v| v).count() as f64 / self.frames() as f64
    }

    /// Mean length of voiced runs in seconds (0 without voicing).
    pub fn mean_voiced_segment_secs(&self) -> f64 {
        let runs = voiced_runs(&self.voiced_mask);
        if runs.is_empty() {
            return 0.0;
        }
        let frames: usize = runs.iter().map(|(a, b)| b - a + 1).sum();
        frames as f64 / runs.len() as f64 * self.hop_secs
    }
}

/// Inclusive `(first, last)` frame index of every run of `true`.
pub(crate) fn voiced_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in mask.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, mask.len() - 1));
    }
    runs
}

/// Computes every LLD channel of a mono clip.
pub fn extract_llds(clip: &AudioClip, cfg: &LldConfig) -> Result<LldMatrix, FeatureError> {
    let frames = frame_signal(clip, cfg.win_ms, cfg.hop_ms)?;
    let rate = clip.sample_rate();
    let x = clip.samples();
    let n = frames.len();
    let win = frames.win();
    let hop = frames.hop();
    let pitch_win = framing::ms_to_samples(cfg.pitch_win_ms, rate);
    let pitch_frames = FrameSeries::centered(x, n, win, pitch_win, hop, rate);
    let track = detect_f0_track(&pitch_frames, &cfg.pitch)?;

    let mut values = vec![vec![0.0; n]; N_LLD];
    let mut period_mask = vec![false; n];
    let centre = |i: usize| (i * hop + win / 2) as f64;

    // jitter and shimmer from period marks inside each voiced run
    for (a, b) in voiced_runs(&track.voiced) {
        let span_start = (centre(a) - hop as f64).max(0.0) as usize;
        let span_end = ((centre(b) + hop as f64) as usize).min(x.len());
        let period_at = |s: usize| {
            let idx = ((s as f64 - (win / 2) as f64) / hop as f64).round().clamp(a as f64, b as f64) as usize;
            rate as f64 / track.f0[idx]
        };
        let pulses = mark_pulses(x, span_start, span_end, period_at);
        if pulses.len() < MIN_PERIODS + 1 {
            continue;
        }
        for i in a..=b {
            let lo = centre(i) - (pitch_win / 2) as f64;
            let hi = centre(i) + (pitch_win / 2) as f64;
            let inside: Vec<Pulse> = pulses.iter().copied().filter(|p| p.pos >= lo && p.pos < hi).collect();
            if let (Some(j), Some(s)) = (jitter_local(&inside), shimmer_local_db(&inside)) {
                values[Lld::JitterLocal.index()][i] = j;
                values[Lld::ShimmerLocalDb.index()][i] = s;
                period_mask[i] = true;
            }
        }
    }

    let analyzer = SpectralAnalyzer::new(win, rate);
    let mut prev: Option<Vec<f64>> = None;
    for i in 0..n {
        let raw = frames.frame(i);
        let ms = raw.iter().map(|v| v * v).sum::<f64>() / win as f64;
        let (sf, norm) = analyzer.analyze(&frames.windowed(i), prev.as_deref());
        prev = Some(norm);
        let mut set = |ch: Lld, v: f64| values[ch.index()][i] = v;
        set(Lld::F0Hz, track.f0[i]);
        set(Lld::VoicingProb, track.strength[i]);
        set(Lld::RmsEnergy, ms.sqrt());
        set(Lld::LogEnergy, 10.0 * (ms + 1e-10).log10());
        set(Lld::HnrDb, hnr_db(track.strength[i]));
        set(Lld::AlphaRatioDb, sf.alpha_ratio_db);
        set(Lld::HammarbergDb, sf.hammarberg_db);
        set(Lld::SpectralSlope0_500, sf.slope_0_500);
        set(Lld::SpectralSlope500_1500, sf.slope_500_1500);
        set(Lld::SpectralCentroidHz, sf.centroid_hz);
        set(Lld::SpectralFlux, sf.flux);
        set(Lld::Zcr, spectral::zero_crossing_rate(raw));
        for k in 0..N_MFCC {
            set(Lld::mfcc(k), sf.mfcc[k]);
        }
    }

    for (ch, row) in Lld::ALL.iter().zip(&values) {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NotFinite { name: ch.name().to_string() });
        }
    }
    Ok(LldMatrix {
        values,
        voiced_mask: track.voiced,
        period_mask,
        hop_secs: frames.hop_secs(),
        duration_secs: clip.duration_secs(),
    })
}

/// Applies `bank` to every channel; output is channel-major in [`Lld::ALL`]
/// order.
pub fn apply_functionals(lld: &LldMatrix, bank: &FunctionalBank) -> Vec<f64> {
    Lld::ALL.iter().flat_map(|&ch| bank.apply(&lld.contour(ch))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Compact,
    Brute,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Compact => "compact",
            Preset::Brute => "brute",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compact" => Ok(Preset::Compact),
            "brute" => Ok(Preset::Brute),
            other => Err(FeatureError::UnknownPreset(other.to_string())),
        }
    }
}

/// Ordered feature names of a preset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDescriptor {
    pub preset: Preset,
    pub names: Vec<String>,
}

impl FeatureDescriptor {
    pub fn dimension(&self) -> usize {
        self.names.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub utterance_id: String,
    pub preset: Preset,
    pub values: Vec<f64>,
}

/// Feature vector of a preprocessed clip.
pub fn extract_features(utterance_id: &str, clip: &AudioClip, preset: Preset) -> Result<FeatureVector, FeatureError> {
    let lld = extract_llds(clip, &LldConfig::default())?;
    let values = presets::features_from_llds(&lld, preset);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        let name = preset_descriptor(preset).names[i].clone();
        return Err(FeatureError::NotFinite { name });
    }
    Ok(FeatureVector { utterance_id: utterance_id.to_string(), preset, values })
}
