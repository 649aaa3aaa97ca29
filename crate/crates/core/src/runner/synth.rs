use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::kv::KvFile;
use super::RunError;
use crate::audio::{write_wav_pcm16, AudioClip};
use crate::corpus::{Emotion, Manifest, UtteranceRecord};
use crate::seed;

const RATE: u32 = 16_000;
/// Emotion cycle per speaker: alternates classes, two emotions per class.
const EMOTION_CYCLE: [Emotion; 4] = [Emotion::Happy, Emotion::Anger, Emotion::Neutral, Emotion::Sad];
const HARMONICS: usize = 5;
const SPEAKER_F0_SPREAD_HZ: f64 = 20.0;
const AM_RATE_HZ: f64 = 4.0;

/// One synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub name: String,
    pub n_speakers: usize,
    /// Utterances per speaker.
    pub n_utterances: usize,
    pub f0_base: f64,
    /// Added to the f0 of class-1 utterances.
    pub f0_offset: f64,
    /// Amplitude-modulation depth for classes 0 and 1.
    pub am_depth: [f64; 2],
    /// Corpus-wide f0 shift.
    pub pitch_shift: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
}

impl SynthCorpus {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            n_speakers: 8,
            n_utterances: 40,
            f0_base: 140.0,
            f0_offset: 60.0,
            am_depth: [0.1, 0.4],
            pitch_shift: 0.0,
            noise: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub corpora: Vec<SynthCorpus>,
    pub seed: u64,
}

impl SynthSpec {
    /// Parses `seed = N`, `corpora = A,B` and per-corpus `A.field = value`
    /// lines; `am_depth` takes two comma-separated values.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut kv = KvFile::parse(text)?;
        let seed = kv.take_parsed("seed")?.unwrap_or(0);
        let names = kv.take("corpora").ok_or_else(|| RunError::Config("missing key corpora".into()))?;
        let mut corpora = Vec::new();
        for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let mut c = SynthCorpus::named(name);
            let key = |f: &str| format!("{name}.{f}");
            if let Some(v) = kv.take_parsed(&key("n_speakers"))? {
                c.n_speakers = v;
            }
            if let Some(v) = kv.take_parsed(&key("n_utterances"))? {
                c.n_utterances = v;
            }
            if let Some(v) = kv.take_parsed(&key("f0_base"))? {
                c.f0_base = v;
            }
            if let Some(v) = kv.take_parsed(&key("f0_offset"))? {
                c.f0_offset = v;
            }
            if let Some(v) = kv.take_parsed(&key("pitch_shift"))? {
                c.pitch_shift = v;
            }
            if let Some(v) = kv.take_parsed(&key("noise"))? {
                c.noise = v;
            }
            if let Some(v) = kv.take(&key("am_depth")) {
                let parts: Vec<f64> = v.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()
                    .map_err(|_| RunError::Config(format!("invalid am_depth {v:?}")))?;
                c.am_depth = parts.try_into().map_err(|_| RunError::Config(format!("am_depth needs two values: {v:?}")))?;
            }
            corpora.push(c);
        }
        kv.finish()?;
        let spec = Self { corpora, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.corpora.is_empty() {
            return Err(RunError::Config("no corpora".into()));
        }
        for (i, c) in self.corpora.iter().enumerate() {
            if self.corpora[..i].iter().any(|o| o.name == c.name) {
                return Err(RunError::Config(format!("duplicate corpus {}", c.name)));
            }
            if c.name.is_empty() || c.name.contains(['/', '\\', ',']) {
                return Err(RunError::Config(format!("invalid corpus name {:?}", c.name)));
            }
            if c.n_speakers < 2 || c.n_utterances < 2 {
                return Err(RunError::Config(format!("{}: need at least 2 speakers and 2 utterances each", c.name)));
            }
            let lowest = c.f0_base + c.pitch_shift - SPEAKER_F0_SPREAD_HZ + c.f0_offset.min(0.0);
            let highest = c.f0_base + c.pitch_shift + SPEAKER_F0_SPREAD_HZ + c.f0_offset.max(0.0);
            if lowest < 40.0 || highest * HARMONICS as f64 >= RATE as f64 / 2.0 {
                return Err(RunError::Config(format!("{}: f0 range {lowest}..{highest} Hz unusable", c.name)));
            }
            if c.am_depth.iter().any(|d| !(0.0..1.0).contains(d)) || !(c.noise >= 0.0) {
                return Err(RunError::Config(format!("{}: am_depth must lie in [0,1) and noise ≥ 0", c.name)));
            }
        }
        Ok(())
    }
}

/// One utterance: a decaying-harmonic tone with a gentle pitch glide,
/// sinusoidal amplitude modulation, short fades and additive noise.
fn synth_utterance(f0: f64, am_depth: f64, noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let secs = rng.random_range(1.0..2.0);
    let n = (secs * RATE as f64) as usize;
    let glide = rng.random_range(-0.02..0.02);
    let am_phase = rng.random_range(0.0..2.0 * PI);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let fade = (0.02 * RATE as f64) as usize;
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / RATE as f64;
        // Linear glide centred on f0 so the mean pitch stays at f0.
        let f = f0 * (1.0 + glide * (2.0 * t / secs - 1.0));
        phase += 2.0 * PI * f / RATE as f64;
        let tone: f64 = (1..=HARMONICS).map(|h| (h as f64 * phase).sin() / h as f64).sum();
        let env = (1.0 + am_depth * (2.0 * PI * AM_RATE_HZ * t + am_phase).sin()) / (1.0 + am_depth);
        let ramp = (i.min(n - 1 - i) as f64 / fade as f64).min(1.0);
        let mut v = 0.4 * tone * env * ramp;
        if noise > 0.0 {
            v += normal.sample(rng);
        }
        out.push(v);
    }
    out
}

/// Writes WAV files under `out_dir/<corpus>/<speaker>/` and `out_dir/manifest.csv`.
pub fn generate_synthetic_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<(Manifest, PathBuf), RunError> {
    spec.validate()?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    let mut records = Vec::new();
    for (ci, c) in spec.corpora.iter().enumerate() {
        for s in 0..c.n_speakers {
            let speaker = format!("{}_s{s:02}", c.name);
            let dir = out_dir.join(&c.name).join(&speaker);
            fs::create_dir_all(&dir).map_err(io(&dir))?;
            let mut spk_rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[ci as u64, s as u64]));
            let speaker_f0 = c.f0_base + c.pitch_shift + spk_rng.random_range(-SPEAKER_F0_SPREAD_HZ..SPEAKER_F0_SPREAD_HZ);
            for u in 0..c.n_utterances {
                let emotion = EMOTION_CYCLE[u % EMOTION_CYCLE.len()];
                let class = emotion.valence().label();
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[ci as u64, s as u64, u as u64]));
                let f0 = speaker_f0 + class as f64 * c.f0_offset;
                let samples = synth_utterance(f0, c.am_depth[class], c.noise, &mut rng);
                let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let samples = if peak > 0.99 { samples.iter().map(|v| v * 0.99 / peak).collect() } else { samples };
                let id = format!("{speaker}_u{u:03}");
                let rel = PathBuf::from(&c.name).join(&speaker).join(format!("{id}.wav"));
                let clip = AudioClip::mono(samples, RATE).map_err(|e| RunError::Config(e.to_string()))?;
                write_wav_pcm16(out_dir.join(&rel), &clip).map_err(|e| RunError::Config(e.to_string()))?;
                records.push(UtteranceRecord { utterance_id: id, path: rel, corpus: c.name.clone(), speaker_id: speaker.clone(), emotion });
            }
        }
    }
    let manifest = Manifest::new(records).map_err(|e| RunError::Config(e.to_string()))?;
    let path = out_dir.join("manifest.csv");
    manifest.write_csv(&path).map_err(|e| RunError::Config(e.to_string()))?;
    // The returned manifest points at the files on disk.
    let resolved = crate::corpus::parse_manifest(&path).map_err(|e| RunError::Config(e.to_string()))?;
    Ok((resolved, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_spec() {
        let spec = SynthSpec::parse(
            "seed = 5\ncorpora = A, B\nA.n_speakers = 4\nB.pitch_shift = 80\nB.am_depth = 0.2, 0.3\n",
        )
        .unwrap();
        assert_eq!(spec.seed, 5);
        assert_eq!(spec.corpora.len(), 2);
        assert_eq!(spec.corpora[0].n_speakers, 4);
        assert_eq!(spec.corpora[1].pitch_shift, 80.0);
        assert_eq!(spec.corpora[1].am_depth, [0.2, 0.3]);
        assert!(SynthSpec::parse("corpora = A\nA.colour = red").is_err());
        assert!(SynthSpec::parse("seed = 1").is_err());
        assert!(SynthSpec::parse("corpora = A\nA.am_depth = 0.5").is_err());
        assert!(SynthSpec::parse("corpora = A\nA.n_speakers = 1").is_err());
    }

    #[test]
    fn counts_and_determinism() {
        let mut spec = SynthSpec { corpora: vec![SynthCorpus::named("A"), SynthCorpus::named("B")], seed: 3 };
        for c in &mut spec.corpora {
            c.n_speakers = 2;
            c.n_utterances = 4;
        }
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (m, _) = generate_synthetic_corpus(&spec, a.path()).unwrap();
        generate_synthetic_corpus(&spec, b.path()).unwrap();
        assert_eq!(m.len(), 16);
        let per_class = m.records().iter().filter(|r| r.label() == 1).count();
        assert_eq!(per_class, 8);
        for r in m.records() {
            let rel = r.path.strip_prefix(a.path()).unwrap();
            assert_eq!(fs::read(&r.path).unwrap(), fs::read(b.path().join(rel)).unwrap());
        }
        assert_eq!(
            fs::read(a.path().join("manifest.csv")).unwrap(),
            fs::read(b.path().join("manifest.csv")).unwrap()
        );
    }
}
