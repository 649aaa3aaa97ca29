use super::{AudioClip, AudioError, PreprocessConfig};

fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Frame start offsets on the hop grid, plus one end-aligned frame when the
/// grid does not reach the last sample.
fn frame_starts(n: usize, win: usize, hop: usize) -> Vec<usize> {
    if n <= win {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..=(n - win) / hop).map(|i| i * hop).collect();
    let last = n - win;
    if *starts.last().unwrap() != last {
        starts.push(last);
    }
    starts
}

/// Removes leading and trailing silence.
///
/// A frame is active when its mean-square energy exceeds the clip peak
/// energy shifted by `trim_threshold_db`. The kept range runs from the first
/// active frame to the last one; inside those two boundary frames the edge is
/// tightened to the first (last) hop-sized block that is itself active, so the
/// cut lands within one hop of where the signal starts (ends).
pub fn trim_silence(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<AudioClip, AudioError> {
    clip.require_mono()?;
    let x = clip.samples();
    if x.is_empty() {
        return Err(AudioError::EmptyAfterTrim);
    }
    let peak = clip.peak();
    if peak == 0.0 {
        return Err(AudioError::EmptyAfterTrim);
    }
    let rate = clip.sample_rate() as f64;
    let win = ((cfg.trim_frame_ms * rate / 1000.0).round() as usize).max(1);
    let hop = ((cfg.trim_hop_ms * rate / 1000.0).round() as usize).clamp(1, win);
    let threshold = peak * peak * 10f64.powf(cfg.trim_threshold_db / 10.0);
    let active = |s: usize, e: usize| mean_square(&x[s..e.min(x.len())]) > threshold;

    let starts = frame_starts(x.len(), win, hop);
    let first = starts.iter().copied().find(|&s| active(s, s + win));
    let last = starts.iter().rev().copied().find(|&s| active(s, s + win));
    let (Some(first), Some(last)) = (first, last) else {
        return Err(AudioError::EmptyAfterTrim);
    };

    let first_end = (first + win).min(x.len());
    let start = (first..first_end)
        .step_by(hop)
        .find(|&b| active(b, b + hop))
        .unwrap_or(first);

    let last_end = (last + win).min(x.len());
    let mut end = last_end;
    let mut b_end = last_end;
    while b_end > last {
        let b_start = b_end.saturating_sub(hop).max(last);
        if active(b_start, b_end) {
            end = b_end;
            break;
        }
        b_end = b_start;
    }

    if start >= end {
        return Err(AudioError::EmptyAfterTrim);
    }
    AudioClip::mono(x[start..end].to_vec(), clip.sample_rate())
}
