//! Corpus manifests, the binary valence mapping and majority-vote gold
//! labels.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::KappaInput;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("duplicate utterance id {0}")]
    DuplicateId(String),
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
    #[error("manifest has no records")]
    EmptyManifest,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid ratings: {0}")]
    InvalidRatings(String),
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl CorpusError {
    pub fn kind(&self) -> &'static str {
        match self {
            CorpusError::MissingColumn(_) => "MissingColumn",
            CorpusError::DuplicateId(_) => "DuplicateId",
            CorpusError::UnknownEmotion(_) => "UnknownEmotion",
            CorpusError::EmptyManifest => "EmptyManifest",
            CorpusError::InvalidRecord(_) => "InvalidRecord",
            CorpusError::InvalidRatings(_) => "InvalidRatings",
            CorpusError::Csv { source, .. } if matches!(source.kind(), csv::ErrorKind::Io(e) if e.kind() == std::io::ErrorKind::NotFound) => {
                "FileNotFound"
            }
            CorpusError::Csv { .. } => "Csv",
        }
    }
}

/// The four emotions shared by all corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happy,
    Anger,
    Sad,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Happy, Emotion::Anger, Emotion::Sad, Emotion::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Happy => "happy",
            Emotion::Anger => "anger",
            Emotion::Sad => "sad",
            Emotion::Neutral => "neutral",
        }
    }

    pub fn valence(self) -> Valence {
        match self {
            Emotion::Happy | Emotion::Neutral => Valence::PositiveNeutral,
            Emotion::Anger | Emotion::Sad => Valence::Negative,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "happy" | "happiness" => Ok(Emotion::Happy),
            "anger" | "angry" => Ok(Emotion::Anger),
            "sad" | "sadness" => Ok(Emotion::Sad),
            "neutral" => Ok(Emotion::Neutral),
            _ => Err(CorpusError::UnknownEmotion(s.to_string())),
        }
    }
}

/// Binary valence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valence {
    /// happy, neutral → 0
    PositiveNeutral = 0,
    /// anger, sad → 1
    Negative = 1,
}

impl Valence {
    pub fn label(self) -> usize {
        self as usize
    }
}

/// Class label (0 or 1) of an emotion name.
pub fn map_valence(emotion: &str) -> Result<usize, CorpusError> {
    Ok(emotion.parse::<Emotion>()?.valence().label())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub path: PathBuf,
    pub corpus: String,
    pub speaker_id: String,
    pub emotion: Emotion,
}

impl UtteranceRecord {
    pub fn label(&self) -> usize {
        self.emotion.valence().label()
    }

    /// Speakers are identified within their corpus.
    pub fn speaker_key(&self) -> (String, String) {
        (self.corpus.clone(), self.speaker_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    records: Vec<UtteranceRecord>,
}

const MANIFEST_COLUMNS: [&str; 5] = ["utterance_id", "path", "corpus", "speaker_id", "emotion"];

impl Manifest {
    /// Validates ids, speakers and non-emptiness.
    pub fn new(records: Vec<UtteranceRecord>) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::EmptyManifest);
        }
        let mut seen = HashSet::new();
        for r in &records {
            if r.utterance_id.is_empty() {
                return Err(CorpusError::InvalidRecord("empty utterance_id".into()));
            }
            if r.speaker_id.is_empty() {
                return Err(CorpusError::InvalidRecord(format!("{}: empty speaker_id", r.utterance_id)));
            }
            if r.corpus.is_empty() {
                return Err(CorpusError::InvalidRecord(format!("{}: empty corpus", r.utterance_id)));
            }
            if !seen.insert(r.utterance_id.as_str()) {
                return Err(CorpusError::DuplicateId(r.utterance_id.clone()));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Corpus names in order of first appearance.
    pub fn corpora(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.corpus) {
                out.push(r.corpus.clone());
            }
        }
        out
    }

    pub fn filter_corpus(&self, corpus: &str) -> Option<Manifest> {
        let records: Vec<_> = self.records.iter().filter(|r| r.corpus == corpus).cloned().collect();
        (!records.is_empty()).then_some(Manifest { records })
    }

    /// Writes the manifest CSV with the standard header.
    pub fn write_csv(&self, path: &Path) -> Result<(), CorpusError> {
        let err = |source| CorpusError::Csv { path: path.display().to_string(), source };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(MANIFEST_COLUMNS).map_err(err)?;
        for r in &self.records {
            w.write_record([
                r.utterance_id.as_str(),
                &r.path.to_string_lossy(),
                &r.corpus,
                &r.speaker_id,
                r.emotion.as_str(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| err(e.into()))
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
}

/// Parses a manifest CSV (`utterance_id,path,corpus,speaker_id,emotion`).
/// Relative audio paths are resolved against the manifest's directory.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Manifest, CorpusError> {
    let path = path.as_ref();
    let err = |source| CorpusError::Csv { path: path.display().to_string(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(err)?;
    let headers = rdr.headers().map_err(err)?.clone();
    let idx: Vec<usize> = MANIFEST_COLUMNS.iter().map(|c| column_index(&headers, c)).collect::<Result<_, _>>()?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(err)?;
        let field = |i: usize| row.get(idx[i]).unwrap_or("").to_string();
        let audio = PathBuf::from(field(1));
        records.push(UtteranceRecord {
            utterance_id: field(0),
            path: if audio.is_relative() { base.join(audio) } else { audio },
            corpus: field(2),
            speaker_id: field(3),
            emotion: field(4).parse()?,
        });
    }
    Manifest::new(records)
}

/// One rater's label for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub utterance_id: String,
    pub rater_id: String,
    pub emotion: Emotion,
}

/// Multi-rater annotations with a constant number of raters per utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    by_item: BTreeMap<String, Vec<(String, Emotion)>>,
    raters: usize,
}

impl RatingsTable {
    pub fn new(rows: Vec<Rating>) -> Result<Self, CorpusError> {
        let mut by_item: BTreeMap<String, Vec<(String, Emotion)>> = BTreeMap::new();
        for r in rows {
            let entry = by_item.entry(r.utterance_id.clone()).or_default();
            if entry.iter().any(|(rater, _)| *rater == r.rater_id) {
                return Err(CorpusError::InvalidRatings(format!(
                    "rater {} rated {} twice",
                    r.rater_id, r.utterance_id
                )));
            }
            entry.push((r.rater_id, r.emotion));
        }
        let raters = by_item.values().next().map(Vec::len).ok_or_else(|| CorpusError::InvalidRatings("no ratings".into()))?;
        if raters < 2 {
            return Err(CorpusError::InvalidRatings("need at least 2 raters per utterance".into()));
        }
        if let Some((id, v)) = by_item.iter().find(|(_, v)| v.len() != raters) {
            return Err(CorpusError::InvalidRatings(format!("{id} has {} ratings, expected {raters}", v.len())));
        }
        Ok(Self { by_item, raters })
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn items(&self) -> usize {
        self.by_item.len()
    }

    /// Item × emotion count matrix for Fleiss' kappa (columns in [`Emotion::ALL`] order).
    pub fn kappa_input(&self) -> Result<KappaInput, crate::metrics::MetricError> {
        let counts = self
            .by_item
            .values()
            .map(|v| Emotion::ALL.iter().map(|e| v.iter().filter(|(_, x)| x == e).count() as u64).collect())
            .collect();
        KappaInput::new(counts)
    }
}

pub fn parse_ratings(path: impl AsRef<Path>) -> Result<RatingsTable, CorpusError> {
    let path = path.as_ref();
    let err = |source| CorpusError::Csv { path: path.display().to_string(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(err)?;
    let headers = rdr.headers().map_err(err)?.clone();
    let idx: Vec<usize> = ["utterance_id", "rater_id", "emotion"]
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(err)?;
        let f = |i: usize| row.get(idx[i]).unwrap_or("").to_string();
        rows.push(Rating { utterance_id: f(0), rater_id: f(1), emotion: f(2).parse()? });
    }
    RatingsTable::new(rows)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MajorityVote {
    pub gold: BTreeMap<String, Emotion>,
    /// Utterances whose top label is tied.
    pub unresolved: Vec<String>,
}

/// Gold label per utterance by strict plurality; ties are left unresolved.
pub fn majority_vote(ratings: &RatingsTable) -> MajorityVote {
    let mut out = MajorityVote::default();
    for (id, votes) in &ratings.by_item {
        let mut tally: BTreeMap<Emotion, usize> = BTreeMap::new();
        for (_, e) in votes {
            *tally.entry(*e).or_default() += 1;
        }
        let top = tally.values().copied().max().unwrap_or(0);
        let winners: Vec<Emotion> = tally.iter().filter(|(_, &c)| c == top).map(|(e, _)| *e).collect();
        if winners.len() == 1 {
            out.gold.insert(id.clone(), winners[0]);
        } else {
            out.unresolved.push(id.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub corpus: String,
    pub samples: usize,
    pub speakers: usize,
    pub per_emotion: BTreeMap<Emotion, usize>,
    /// Count per valence class `[0, 1]`.
    pub per_class: [usize; 2],
    /// Larger class count over smaller (infinite with an empty class).
    pub imbalance_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub corpora: Vec<CorpusSummary>,
    pub total: usize,
}

fn summarize_records<'a>(corpus: &str, records: impl Iterator<Item = &'a UtteranceRecord>) -> CorpusSummary {
    let mut samples = 0;
    let mut speakers = BTreeSet::new();
    let mut per_emotion = BTreeMap::new();
    let mut per_class = [0usize; 2];
    for r in records {
        samples += 1;
        speakers.insert(r.speaker_id.as_str());
        *per_emotion.entry(r.emotion).or_default() += 1;
        per_class[r.label()] += 1;
    }
    let (lo, hi) = (per_class[0].min(per_class[1]), per_class[0].max(per_class[1]));
    let imbalance_ratio = if lo == 0 { f64::INFINITY } else { hi as f64 / lo as f64 };
    CorpusSummary { corpus: corpus.to_string(), samples, speakers: speakers.len(), per_emotion, per_class, imbalance_ratio }
}

/// Per-corpus sample, speaker and class counts.
pub fn summarize(manifest: &Manifest) -> CorpusStats {
    let corpora = manifest
        .corpora()
        .iter()
        .map(|c| summarize_records(c, manifest.records().iter().filter(|r| &r.corpus == c)))
        .collect();
    CorpusStats { corpora, total: manifest.len() }
}

/// Valence label per utterance id.
pub fn labels(manifest: &Manifest) -> HashMap<String, usize> {
    manifest.records().iter().map(|r| (r.utterance_id.clone(), r.label())).collect()
}
