use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, AudioError};

fn map_hound(path: &Path, e: hound::Error) -> AudioError {
    let p = path.display().to_string();
    match e {
        hound::Error::IoError(io) if io.kind() == ErrorKind::NotFound => AudioError::FileNotFound(p),
        // hound reports short reads as a custom `Other` error
        hound::Error::IoError(io)
            if io.kind() == ErrorKind::UnexpectedEof || io.to_string().contains("read enough bytes") =>
        {
            AudioError::CorruptHeader(format!("{p}: truncated"))
        }
        hound::Error::IoError(source) => AudioError::Io { path: p, source },
        hound::Error::Unsupported => AudioError::UnsupportedFormat(p),
        other => AudioError::CorruptHeader(format!("{p}: {other}")),
    }
}

/// Reads a PCM16 or float32 WAV file with one or two channels. Integer
/// samples are divided by 32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if !(1..=2).contains(&spec.channels) {
        return Err(AudioError::UnsupportedFormat(format!(
            "{}: {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{}: {bits}-bit {fmt:?}",
                path.display()
            )))
        }
    };
    AudioClip::new(samples, spec.sample_rate, spec.channels)
        .map_err(|e| AudioError::CorruptHeader(format!("{}: {e}", path.display())))
}

/// Writes a clip as IEEE float32 WAV.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: clip.channels(),
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in clip.samples() {
        w.write_sample(s as f32).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}

/// Writes a clip as 16-bit PCM WAV, clamping to the representable range.
pub fn write_wav_pcm16(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: clip.channels(),
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in clip.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(format_tag: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut v = Vec::new();
        v.extend(b"RIFF");
        v.extend((36 + data.len() as u32).to_le_bytes());
        v.extend(b"WAVEfmt ");
        v.extend(16u32.to_le_bytes());
        v.extend(format_tag.to_le_bytes());
        v.extend(channels.to_le_bytes());
        v.extend(rate.to_le_bytes());
        v.extend((rate * block as u32).to_le_bytes());
        v.extend(block.to_le_bytes());
        v.extend(bits.to_le_bytes());
        v.extend(b"data");
        v.extend((data.len() as u32).to_le_bytes());
        v.extend(data);
        v
    }

    #[test]
    fn pcm16_one_second() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let data: Vec<u8> = (0..16_000i32)
            .flat_map(|i| (((i * 37) % 65536 - 32768) as i16).to_le_bytes())
            .collect();
        std::fs::write(&p, header(1, 1, 16_000, 16, &data)).unwrap();
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.len(), 16_000);
        assert_eq!(clip.sample_rate(), 16_000);
        assert!(clip.samples().iter().all(|s| (-1.0..=1.0).contains(s)));
    }

    #[test]
    fn most_negative_pcm16_is_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let data: Vec<u8> = [i16::MIN, 0, i16::MAX].iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(&p, header(1, 1, 8_000, 16, &data)).unwrap();
        let clip = load_wav(&p).unwrap();
        assert_eq!(clip.samples()[0], -1.0);
        assert_eq!(clip.samples()[2], 32767.0 / 32768.0);
    }

    #[test]
    fn mu_law_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mulaw.wav");
        std::fs::write(&p, header(7, 1, 8_000, 8, &[0x7f; 100])).unwrap();
        assert!(matches!(load_wav(&p), Err(AudioError::UnsupportedFormat(_))));
    }

    #[test]
    fn eight_bit_pcm_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u8.wav");
        std::fs::write(&p, header(1, 1, 8_000, 8, &[0x80; 100])).unwrap();
        assert!(matches!(load_wav(&p), Err(AudioError::UnsupportedFormat(_))));
    }

    #[test]
    fn missing_and_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_wav(dir.path().join("nope.wav")), Err(AudioError::FileNotFound(_))));
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"RIFF\x10\x00\x00\x00JUNKfmt ").unwrap();
        let r = load_wav(&p);
        assert!(matches!(r, Err(AudioError::CorruptHeader(_))), "{r:?}");
        let p = dir.path().join("short.wav");
        std::fs::write(&p, b"RIF").unwrap();
        let r = load_wav(&p);
        assert!(matches!(r, Err(AudioError::CorruptHeader(_))), "{r:?}");
    }

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let clip = AudioClip::new(vec![0.25, -0.5, 0.125, 1.0], 22_050, 2).unwrap();
        write_wav(&p, &clip).unwrap();
        assert_eq!(load_wav(&p).unwrap(), clip);
    }
}
