//! Experiment orchestration: feature caching, self- and cross-corpus
//! evaluation, synthetic corpora and report tables.

mod cache;
mod kv;
mod report;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_features, cache_path, extract_table, load_or_extract, manifest_hash, FeatureTable};
pub use report::{format_percent, render_tables};
pub use synth::{generate_synthetic_corpus, SynthCorpus, SynthSpec};

use crate::corpus::{parse_manifest, Manifest};
use crate::features::Preset;
use crate::learners::{
    fit, predict, search_hyperparams, CandidateScore, ClassWeighting, Hyper, HyperGrid, Matrix, ModelFamily, Scaler,
    SearchMode,
};
use crate::metrics::{confusion_matrix, uar, ConfusionMatrix};
use crate::partition::{cross_corpus_splits, self_corpus_splits, stratified_group_kfold, TrainTestSplit};
use crate::{seed, Result};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cross-corpus mode needs a target corpus")]
    MissingTarget,
    #[error("feature extraction failed for {}", describe_failures(.0))]
    Extraction(Vec<(String, String)>),
    #[error("feature cache: {0}")]
    Cache(String),
    #[error("inconsistent reports: {0}")]
    InconsistentReports(String),
    #[error("scaler fitted on rows outside the training split")]
    ScalerLeak,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

fn describe_failures(f: &[(String, String)]) -> String {
    f.iter().map(|(id, msg)| format!("{id} ({msg})")).collect::<Vec<_>>().join("; ")
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "InvalidConfig",
            RunError::MissingTarget => "MissingTarget",
            RunError::Extraction(_) => "ExtractionFailed",
            RunError::Cache(_) => "CacheCorrupt",
            RunError::InconsistentReports(_) => "InconsistentReports",
            RunError::ScalerLeak => "Leakage",
            RunError::Io { .. } => "Io",
            RunError::Json(_) => "InvalidReport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "self")]
    SelfCorpus,
    #[serde(rename = "cross")]
    CrossCorpus,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SelfCorpus => "self",
            Mode::CrossCorpus => "cross",
        }
    }
}

impl FromStr for Mode {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "self" => Ok(Mode::SelfCorpus),
            "cross" => Ok(Mode::CrossCorpus),
            other => Err(RunError::Config(format!("mode {other:?}"))),
        }
    }
}

/// How cross-corpus training rows are standardized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerScope {
    /// One scaler on all training rows.
    #[default]
    Pooled,
    /// One scaler per corpus, each on that corpus's training rows.
    PerCorpus,
}

impl FromStr for ScalerScope {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(ScalerScope::Pooled),
            "per_corpus" => Ok(ScalerScope::PerCorpus),
            other => Err(RunError::Config(format!("scaler_scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub preset: Preset,
    pub model: ModelFamily,
    pub mode: Mode,
    pub target: Option<String>,
    pub k: usize,
    pub seed: u64,
    pub search: SearchMode,
    pub class_weighting: ClassWeighting,
    pub standardize: bool,
    pub scaler_scope: ScalerScope,
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(manifest: impl Into<PathBuf>, preset: Preset, model: ModelFamily, mode: Mode) -> Self {
        Self {
            manifest: manifest.into(),
            preset,
            model,
            mode,
            target: None,
            k: 4,
            seed: 0,
            search: SearchMode::Grid,
            class_weighting: ClassWeighting::None,
            standardize: true,
            scaler_scope: ScalerScope::Pooled,
            cache_dir: None,
        }
    }

    /// Parses a `key = value` file. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, RunError> {
        let mut kv = kv::KvFile::parse(text)?;
        let manifest = kv.take("manifest").ok_or_else(|| RunError::Config("missing key manifest".into()))?;
        let preset = match kv.take("preset") {
            Some(p) => p.parse().map_err(|e: crate::features::FeatureError| RunError::Config(e.to_string()))?,
            None => Preset::Compact,
        };
        let model = match kv.take("model") {
            Some(m) => m.parse().map_err(|e: crate::learners::LearnError| RunError::Config(e.to_string()))?,
            None => ModelFamily::Logreg,
        };
        let mode = kv.take_parsed("mode")?.unwrap_or(Mode::SelfCorpus);
        let mut cfg = Self::new(base.join(manifest), preset, model, mode);
        cfg.target = kv.take("target").filter(|t| !t.is_empty());
        if let Some(k) = kv.take_parsed("k")? {
            cfg.k = k;
        }
        if let Some(s) = kv.take_parsed("seed")? {
            cfg.seed = s;
        }
        if let Some(s) = kv.take("search") {
            cfg.search = s.parse().map_err(|e: crate::learners::LearnError| RunError::Config(e.to_string()))?;
        }
        if let Some(w) = kv.take("class_weighting") {
            cfg.class_weighting = w.parse().map_err(|e: crate::learners::LearnError| RunError::Config(e.to_string()))?;
        }
        if let Some(s) = kv.take_parsed("standardize")? {
            cfg.standardize = s;
        }
        if let Some(s) = kv.take_parsed("scaler_scope")? {
            cfg.scaler_scope = s;
        }
        cfg.cache_dir = kv.take("cache_dir").filter(|d| !d.is_empty()).map(|d| base.join(d));
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.k < 2 {
            return Err(RunError::Config(format!("k = {} (need ≥ 2)", self.k)));
        }
        if self.mode == Mode::CrossCorpus && self.target.is_none() {
            return Err(RunError::MissingTarget);
        }
        Ok(())
    }

    pub fn grid(&self) -> HyperGrid {
        HyperGrid { mode: self.search, ..HyperGrid::default_for(self.model) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Rows the scaler statistics were computed from.
    pub scaler_rows: usize,
    pub uar: f64,
    pub confusion: ConfusionMatrix,
    pub hyper: Hyper,
    pub search: Vec<CandidateScore>,
    pub search_seed: u64,
    pub train_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub target: String,
    pub corpora: Vec<String>,
    pub feature_dim: usize,
    pub fold_uars: Vec<f64>,
    pub mean_uar: f64,
    pub folds: Vec<FoldReport>,
    pub partition_seed: u64,
    pub wall_clock_secs: f64,
}

impl EvalReport {
    /// Copy with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_clock_secs: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String, RunError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let r: Self = serde_json::from_str(text)?;
        if r.fold_uars.len() != r.folds.len() {
            return Err(RunError::InconsistentReports("fold count disagrees with fold UARs".into()));
        }
        Ok(r)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} target={} mean UAR {} % over {} folds",
            self.config.mode.as_str(),
            self.config.model,
            self.config.preset,
            self.target,
            format_percent(self.mean_uar),
            self.folds.len()
        )
    }
}

/// Loads the manifest and features named by `config` and runs it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let manifest = parse_manifest(&config.manifest)?;
    let table = load_or_extract(&manifest, config.preset, config.cache_dir.as_deref())?;
    run_with_features(config, &manifest, &table)
}

pub fn run_self_corpus(config: &ExperimentConfig) -> Result<EvalReport> {
    if config.mode != Mode::SelfCorpus {
        return Err(RunError::Config("run_self_corpus needs mode = self".into()).into());
    }
    run_experiment(config)
}

pub fn run_cross_corpus(config: &ExperimentConfig) -> Result<EvalReport> {
    if config.mode != Mode::CrossCorpus {
        return Err(RunError::Config("run_cross_corpus needs mode = cross".into()).into());
    }
    run_experiment(config)
}

fn resolve_target(config: &ExperimentConfig, manifest: &Manifest) -> Result<String> {
    let corpora = manifest.corpora();
    match (&config.target, config.mode) {
        (Some(t), _) if corpora.contains(t) => Ok(t.clone()),
        (Some(t), _) => Err(crate::partition::PartitionError::UnknownCorpus(t.clone()).into()),
        (None, Mode::SelfCorpus) if corpora.len() == 1 => Ok(corpora[0].clone()),
        (None, Mode::SelfCorpus) => {
            Err(RunError::Config(format!("manifest holds {} corpora; name a target", corpora.len())).into())
        }
        (None, Mode::CrossCorpus) => Err(RunError::MissingTarget.into()),
    }
}

/// Runs `config` on precomputed features (one row per manifest record).
pub fn run_with_features(config: &ExperimentConfig, manifest: &Manifest, table: &FeatureTable) -> Result<EvalReport> {
    let started = Instant::now();
    config.validate()?;
    if table.descriptor.preset != config.preset || table.ids.len() != manifest.len() {
        return Err(RunError::Cache("feature table does not match manifest/preset".into()).into());
    }
    let target = resolve_target(config, manifest)?;
    let target_manifest = manifest.filter_corpus(&target).expect("target corpus is present");
    let target_labels: Vec<usize> = target_manifest.records().iter().map(|r| r.label()).collect();
    let partition_seed = seed::derive(config.seed, &[0]);
    let assignment = stratified_group_kfold(&target_manifest, &target_labels, config.k, partition_seed)?;
    let splits = match config.mode {
        Mode::SelfCorpus => self_corpus_splits(&assignment),
        Mode::CrossCorpus => cross_corpus_splits(&target, manifest, &assignment, config.k)?,
    };
    for s in &splits {
        s.check(manifest)?;
    }

    let index: HashMap<&str, usize> = manifest.records().iter().enumerate().map(|(i, r)| (r.utterance_id.as_str(), i)).collect();
    for (id, r) in table.ids.iter().zip(manifest.records()) {
        if *id != r.utterance_id {
            return Err(RunError::Cache(format!("feature row {id} out of manifest order")).into());
        }
    }
    let ctx = FoldContext { config, manifest, table, index: &index };
    let folds: Vec<FoldReport> = splits
        .par_iter()
        .enumerate()
        .map(|(f, split)| ctx.run_fold(f, split))
        .collect::<Result<_>>()?;

    let fold_uars: Vec<f64> = folds.iter().map(|f| f.uar).collect();
    let mean_uar = fold_uars.iter().sum::<f64>() / fold_uars.len() as f64;
    let corpora = match config.mode {
        Mode::SelfCorpus => vec![target.clone()],
        Mode::CrossCorpus => manifest.corpora(),
    };
    Ok(EvalReport {
        config: config.clone(),
        target,
        corpora,
        feature_dim: table.dimension(),
        fold_uars,
        mean_uar,
        folds,
        partition_seed,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

struct FoldContext<'a> {
    config: &'a ExperimentConfig,
    manifest: &'a Manifest,
    table: &'a FeatureTable,
    index: &'a HashMap<&'a str, usize>,
}

impl FoldContext<'_> {
    fn rows(&self, ids: &[String]) -> Vec<usize> {
        ids.iter().map(|id| self.index[id.as_str()]).collect()
    }

    fn matrix(&self, rows: &[usize]) -> Result<Matrix> {
        let data = rows.iter().flat_map(|&i| self.table.rows[i].iter().copied()).collect();
        Ok(Matrix::new(rows.len(), self.table.dimension(), data)?)
    }

    /// Fits scalers on `train` only and applies them to both sides.
    fn standardize(&self, train: &[usize], test: &[usize]) -> Result<(Matrix, Matrix, usize)> {
        let (xtr, xte) = (self.matrix(train)?, self.matrix(test)?);
        if !self.config.standardize {
            return Ok((xtr, xte, 0));
        }
        let test_set: std::collections::HashSet<usize> = test.iter().copied().collect();
        let fit_on = |rows: &[usize]| -> Result<Scaler> {
            if rows.iter().any(|r| test_set.contains(r)) {
                return Err(RunError::ScalerLeak.into());
            }
            Ok(Scaler::fit(&self.matrix(rows)?)?)
        };
        match self.config.scaler_scope {
            ScalerScope::Pooled => {
                let s = fit_on(train)?;
                Ok((s.transform(&xtr)?, s.transform(&xte)?, train.len()))
            }
            ScalerScope::PerCorpus => {
                let corpus_of = |i: usize| self.manifest.records()[i].corpus.as_str();
                let mut scalers: HashMap<&str, Scaler> = HashMap::new();
                for c in self.manifest.corpora() {
                    let rows: Vec<usize> = train.iter().copied().filter(|&i| corpus_of(i) == c).collect();
                    if !rows.is_empty() {
                        let c = self.manifest.records()[rows[0]].corpus.as_str();
                        scalers.insert(c, fit_on(&rows)?);
                    }
                }
                let apply = |rows: &[usize]| -> Result<Matrix> {
                    let mut data = Vec::with_capacity(rows.len() * self.table.dimension());
                    for &i in rows {
                        let s = scalers
                            .get(corpus_of(i))
                            .ok_or_else(|| RunError::Config(format!("no training rows for corpus {}", corpus_of(i))))?;
                        let one = Matrix::new(1, self.table.dimension(), self.table.rows[i].clone())?;
                        data.extend_from_slice(s.transform(&one)?.row(0));
                    }
                    Ok(Matrix::new(rows.len(), self.table.dimension(), data)?)
                };
                Ok((apply(train)?, apply(test)?, train.len()))
            }
        }
    }

    fn run_fold(&self, fold: usize, split: &TrainTestSplit) -> Result<FoldReport> {
        let train = self.rows(&split.train_ids);
        let test = self.rows(&split.test_ids);
        let (xtr, xte, scaler_rows) = self.standardize(&train, &test)?;
        let label = |i: &usize| self.manifest.records()[*i].label();
        let ytr: Vec<usize> = train.iter().map(label).collect();
        let yte: Vec<usize> = test.iter().map(label).collect();
        let groups: Vec<(String, String)> = train.iter().map(|&i| self.manifest.records()[i].speaker_key()).collect();

        let search_seed = seed::derive(self.config.seed, &[1, fold as u64]);
        let train_seed = seed::derive(self.config.seed, &[2, fold as u64]);
        let grid = self.config.grid();
        let result = search_hyperparams(&grid, &xtr, &ytr, &groups, 3, self.config.class_weighting, search_seed)?;
        let model = fit(&result.best, &xtr, &ytr, self.config.class_weighting, train_seed)?;
        let pred = predict(&model, &xte)?;
        let confusion = confusion_matrix(&yte, &pred.labels, 2)?;
        Ok(FoldReport {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            scaler_rows,
            uar: uar(&confusion)?,
            confusion,
            hyper: result.best,
            search: result.scores,
            search_seed,
            train_seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let text = "manifest = data/m.csv\npreset = brute\nmodel = mlp\nmode = cross\ntarget = B\nk = 5\nseed = 9\n\
                    search = randomized:3\nclass_weighting = balanced\nstandardize = false\nscaler_scope = per_corpus\ncache_dir = cache\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.manifest, PathBuf::from("/base/data/m.csv"));
        assert_eq!(cfg.preset, Preset::Brute);
        assert_eq!(cfg.model, ModelFamily::Mlp);
        assert_eq!(cfg.mode, Mode::CrossCorpus);
        assert_eq!(cfg.target.as_deref(), Some("B"));
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.search, SearchMode::Randomized(3));
        assert_eq!(cfg.class_weighting, ClassWeighting::Balanced);
        assert!(!cfg.standardize);
        assert_eq!(cfg.scaler_scope, ScalerScope::PerCorpus);
        assert_eq!(cfg.cache_dir, Some(PathBuf::from("/base/cache")));
        assert_eq!(cfg.grid().candidates.len(), 12);
    }

    #[test]
    fn config_errors() {
        let base = Path::new(".");
        assert!(matches!(ExperimentConfig::parse("manifest = m\nmode = cross", base), Err(RunError::MissingTarget)));
        assert!(matches!(ExperimentConfig::parse("manifest = m\nk = 1", base), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("preset = compact", base), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("manifest = m\nfoo = 1", base), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("manifest = m\npreset = tiny", base), Err(RunError::Config(_))));
    }
}
