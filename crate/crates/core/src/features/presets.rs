use super::{apply_functionals, FeatureDescriptor, Functional, FunctionalBank, Lld, LldMatrix, Preset, N_LLD};

use Functional as F;

/// Utterance-level features appended to both presets.
pub const DURATIONAL: [&str; 3] = ["voiced_fraction", "mean_voiced_segment_sec", "duration_sec"];

const PITCH_LIKE: [Functional; 10] = [
    F::Mean,
    F::Stddev,
    F::Percentile20,
    F::Percentile50,
    F::Percentile80,
    F::Range20_80,
    F::MeanRisingSlope,
    F::StddevRisingSlope,
    F::MeanFallingSlope,
    F::StddevFallingSlope,
];
const SPREAD: [Functional; 3] = [F::Mean, F::Stddev, F::Percentile50];
const LEVEL: [Functional; 6] = [F::Mean, F::Stddev, F::Percentile20, F::Percentile50, F::Percentile80, F::Max];
const HNR: [Functional; 5] = [F::Mean, F::Stddev, F::Percentile20, F::Percentile50, F::Percentile80];
const MOMENTS: [Functional; 2] = [F::Mean, F::Stddev];

/// Channel groups of the compact preset, in output order.
pub const COMPACT_PAIRS: &[(Lld, &[Functional])] = &[
    (Lld::F0Hz, &PITCH_LIKE),
    (Lld::LogEnergy, &PITCH_LIKE),
    (Lld::RmsEnergy, &LEVEL),
    (Lld::JitterLocal, &SPREAD),
    (Lld::ShimmerLocalDb, &SPREAD),
    (Lld::HnrDb, &HNR),
    (Lld::VoicingProb, &SPREAD),
    (Lld::AlphaRatioDb, &SPREAD),
    (Lld::HammarbergDb, &SPREAD),
    (Lld::SpectralSlope0_500, &SPREAD),
    (Lld::SpectralSlope500_1500, &SPREAD),
    (Lld::SpectralCentroidHz, &SPREAD),
    (Lld::SpectralFlux, &SPREAD),
    (Lld::Zcr, &[F::Mean]),
    (Lld::Mfcc1, &MOMENTS),
    (Lld::Mfcc2, &MOMENTS),
    (Lld::Mfcc3, &MOMENTS),
    (Lld::Mfcc4, &MOMENTS),
    (Lld::Mfcc5, &MOMENTS),
    (Lld::Mfcc6, &MOMENTS),
    (Lld::Mfcc7, &MOMENTS),
    (Lld::Mfcc8, &MOMENTS),
    (Lld::Mfcc9, &MOMENTS),
    (Lld::Mfcc10, &MOMENTS),
    (Lld::Mfcc11, &MOMENTS),
    (Lld::Mfcc12, &MOMENTS),
    (Lld::Mfcc13, &MOMENTS),
];

pub const COMPACT_DIM: usize = 88;
/// Base channels and their deltas under the full bank, plus durational features.
pub const BRUTE_DIM: usize = 2 * N_LLD * Functional::ALL.len() + DURATIONAL.len();

pub fn preset_descriptor(preset: Preset) -> FeatureDescriptor {
    let mut names = Vec::new();
    match preset {
        Preset::Compact => {
            for (ch, funcs) in COMPACT_PAIRS {
                names.extend(funcs.iter().map(|f| format!("{}_{}", ch.name(), f.name())));
            }
        }
        Preset::Brute => {
            for suffix in ["", "_delta"] {
                for ch in Lld::ALL {
                    names.extend(Functional::ALL.iter().map(|f| format!("{}{}_{}", ch.name(), suffix, f.name())));
                }
            }
        }
    }
    names.extend(DURATIONAL.iter().map(|s| s.to_string()));
    FeatureDescriptor { preset, names }
}

fn durational(lld: &LldMatrix) -> [f64; 3] {
    [lld.voiced_fraction(), lld.mean_voiced_segment_secs(), lld.duration_secs()]
}

pub(crate) fn features_from_llds(lld: &LldMatrix, preset: Preset) -> Vec<f64> {
    let mut out = Vec::with_capacity(match preset {
        Preset::Compact => COMPACT_DIM,
        Preset::Brute => BRUTE_DIM,
    });
    match preset {
        Preset::Compact => {
            for (ch, funcs) in COMPACT_PAIRS {
                let bank = FunctionalBank::new(funcs.to_vec()).expect("compact groups are non-empty and unique");
                out.extend(bank.apply(&lld.contour(*ch)));
            }
        }
        Preset::Brute => {
            let bank = FunctionalBank::full();
            out.extend(apply_functionals(lld, &bank));
            for ch in Lld::ALL {
                out.extend(bank.apply(&lld.contour(*ch).delta()));
            }
        }
    }
    out.extend(durational(lld));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tests::tone;
    use crate::features::{extract_features, FeatureVector};
    use std::collections::HashSet;

    fn component(fv: &FeatureVector, name: &str) -> f64 {
        let d = preset_descriptor(fv.preset);
        fv.values[d.names.iter().position(|n| n == name).unwrap()]
    }

    #[test]
    fn dimensions() {
        let c = preset_descriptor(Preset::Compact);
        assert_eq!(c.dimension(), 88);
        assert_eq!(COMPACT_DIM, 88);
        let b = preset_descriptor(Preset::Brute);
        assert_eq!(b.dimension(), BRUTE_DIM);
        assert_eq!(BRUTE_DIM, 2217);
        assert!(b.dimension() > 500);
    }

    #[test]
    fn names_unique_and_stable() {
        for p in [Preset::Compact, Preset::Brute] {
            let d = preset_descriptor(p);
            let set: HashSet<_> = d.names.iter().collect();
            assert_eq!(set.len(), d.names.len());
            assert_eq!(d, preset_descriptor(p));
        }
    }

    #[test]
    fn output_matches_descriptor() {
        let clip = tone(200.0, 0.6, 0.5);
        for p in [Preset::Compact, Preset::Brute] {
            let fv = extract_features("u", &clip, p).unwrap();
            assert_eq!(fv.values.len(), preset_descriptor(p).dimension());
        }
    }

    #[test]
    fn tone_f0_mean() {
        let fv = extract_features("t", &tone(220.0, 1.0, 0.9), Preset::Compact).unwrap();
        let f0 = component(&fv, "f0_hz_mean");
        assert!((f0 - 220.0).abs() <= 2.0, "{f0}");
        assert!(component(&fv, "jitter_local_mean") < 1e-3);
        assert!(component(&fv, "shimmer_local_db_mean") < 0.05);
        assert!((component(&fv, "duration_sec") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_invariant_components() {
        let a = extract_features("a", &tone(210.0, 1.0, 0.8), Preset::Compact).unwrap();
        let b = extract_features("b", &tone(210.0, 1.0, 0.4), Preset::Compact).unwrap();
        let d = preset_descriptor(Preset::Compact);
        for (i, name) in d.names.iter().enumerate() {
            if name.starts_with("f0_") || name.starts_with("jitter") || name.starts_with("shimmer") || name.starts_with("voicing") {
                assert!((a.values[i] - b.values[i]).abs() < 1e-6, "{name}");
            }
        }
        assert!((component(&a, "log_energy_mean") - component(&b, "log_energy_mean")).abs() > 1.0);
        assert!(component(&a, "rms_energy_mean") > component(&b, "rms_energy_mean"));
    }

    #[test]
    fn deterministic() {
        let clip = tone(190.0, 0.7, 0.6);
        let a = extract_features("x", &clip, Preset::Brute).unwrap();
        let b = extract_features("x", &clip, Preset::Brute).unwrap();
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
