use std::fs;
use std::path::Path;

use xcorpus_core::corpus::{parse_manifest, Manifest};
use xcorpus_core::features::Preset;
use xcorpus_core::learners::ModelFamily;
use xcorpus_core::runner::{
    cache_features, extract_table, generate_synthetic_corpus, load_or_extract, render_tables, run_with_features,
    EvalReport, ExperimentConfig, Mode, RunError, SynthCorpus, SynthSpec,
};
use xcorpus_core::{audio::PreprocessConfig, Error};

fn small(name: &str, speakers: usize, utts: usize) -> SynthCorpus {
    SynthCorpus { n_speakers: speakers, n_utterances: utts, ..SynthCorpus::named(name) }
}

fn synth(dir: &Path, corpora: Vec<SynthCorpus>, seed: u64) -> Manifest {
    generate_synthetic_corpus(&SynthSpec { corpora, seed }, dir).unwrap().0
}

#[test]
fn cache_file_shape_and_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), vec![small("A", 2, 5)], 1);
    assert_eq!(m.len(), 10);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    cache_features(&m, Preset::Compact, &a).unwrap();
    cache_features(&m, Preset::Compact, &b).unwrap();
    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines.iter().all(|l| l.split(',').count() == 89));
    assert!(lines[0].starts_with("utterance_id,"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_audio_names_the_utterance() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), vec![small("A", 2, 3)], 2);
    let victim = m.records()[4].clone();
    fs::remove_file(&victim.path).unwrap();
    match extract_table(&m, Preset::Compact, &PreprocessConfig::default()) {
        Err(RunError::Extraction(failures)) => {
            assert_eq!(failures.len(), 1);
            assert_eq!(failures[0].0, victim.utterance_id);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn synthetic_counts_and_class_f0_offset() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), vec![SynthCorpus::named("A"), SynthCorpus::named("B")], 9);
    assert_eq!(m.len(), 640);
    let emotions: std::collections::BTreeSet<_> = m.records().iter().map(|r| r.emotion).collect();
    assert_eq!(emotions.len(), 4);
    for class in 0..2 {
        let per: std::collections::BTreeSet<_> = m.records().iter().filter(|r| r.label() == class).map(|r| r.emotion).collect();
        assert_eq!(per.len(), 2);
    }

    // Measured f0 over one corpus.
    let a = m.filter_corpus("A").unwrap();
    let table = load_or_extract(&a, Preset::Compact, None).unwrap();
    let f0 = table.descriptor.names.iter().position(|n| n == "f0_hz_mean").unwrap();
    let mut sums = [0.0; 2];
    let mut counts = [0.0; 2];
    for (r, row) in a.records().iter().zip(&table.rows) {
        sums[r.label()] += row[f0];
        counts[r.label()] += 1.0;
    }
    let gap = sums[1] / counts[1] - sums[0] / counts[0];
    assert!((gap - 60.0).abs() <= 3.0, "measured class f0 gap {gap}");
}

#[test]
fn cache_dir_reuses_features() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth(dir.path(), vec![small("A", 2, 3)], 3);
    let cache = dir.path().join("cache");
    let first = load_or_extract(&m, Preset::Compact, Some(&cache)).unwrap();
    let files: Vec<_> = fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1);
    let second = load_or_extract(&m, Preset::Compact, Some(&cache)).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, extract_table(&m, Preset::Compact, &PreprocessConfig::default()).unwrap());
}

fn two_corpus_setup(dir: &Path) -> (Manifest, xcorpus_core::runner::FeatureTable, std::path::PathBuf) {
    let (_, path) = generate_synthetic_corpus(
        &SynthSpec { corpora: vec![small("A", 4, 8), small("B", 4, 8)], seed: 5 },
        dir,
    )
    .unwrap();
    let m = parse_manifest(&path).unwrap();
    let t = load_or_extract(&m, Preset::Compact, None).unwrap();
    (m, t, path)
}

#[test]
fn self_and_cross_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (m, t, path) = two_corpus_setup(dir.path());
    let mut cfg = ExperimentConfig::new(&path, Preset::Compact, ModelFamily::Logreg, Mode::SelfCorpus);
    cfg.target = Some("B".into());
    let self_report = run_with_features(&cfg, &m, &t).unwrap();
    assert_eq!(self_report.folds.len(), 4);
    let mean = self_report.fold_uars.iter().sum::<f64>() / 4.0;
    assert_eq!(self_report.mean_uar, mean);
    for f in &self_report.folds {
        assert_eq!(f.scaler_rows, f.train_size);
        assert_eq!(f.train_size + f.test_size, 32);
    }

    cfg.mode = Mode::CrossCorpus;
    let cross = run_with_features(&cfg, &m, &t).unwrap();
    for f in &cross.folds {
        // all of A plus three quarters of B's speakers
        assert_eq!(f.train_size + f.test_size, 64);
        assert!(f.train_size >= 32 + 16);
    }
    assert_eq!(cross.corpora, vec!["A".to_string(), "B".to_string()]);

    let back = EvalReport::from_json(&cross.to_json().unwrap()).unwrap();
    assert_eq!(back, cross);
    assert_eq!(run_with_features(&cfg, &m, &t).unwrap().without_timing(), cross.without_timing());

    let table = render_tables(&[self_report.clone(), cross.clone()]).unwrap();
    assert!(table.lines().any(|l| l.starts_with("| B |")));
    let mut mlp = cross.clone();
    mlp.config.model = ModelFamily::Mlp;
    assert!(matches!(render_tables(&[self_report, mlp]), Err(RunError::InconsistentReports(_))));
}

#[test]
fn cross_mode_needs_two_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = generate_synthetic_corpus(&SynthSpec { corpora: vec![small("A", 4, 4)], seed: 1 }, dir.path()).unwrap();
    let m = parse_manifest(&path).unwrap();
    let t = load_or_extract(&m, Preset::Compact, None).unwrap();
    let mut cfg = ExperimentConfig::new(&path, Preset::Compact, ModelFamily::Logreg, Mode::CrossCorpus);
    cfg.target = Some("A".into());
    let err = run_with_features(&cfg, &m, &t).unwrap_err();
    assert_eq!(err.kind(), "SingleCorpus");
    cfg.target = Some("Z".into());
    assert!(matches!(run_with_features(&cfg, &m, &t), Err(Error::Partition(_))));
}
