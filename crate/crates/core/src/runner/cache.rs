use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::RunError;
use crate::audio::{load_wav, preprocess, PreprocessConfig};
use crate::corpus::Manifest;
use crate::features::preset_descriptor;
use crate::features::{extract_features, FeatureDescriptor, Preset};

/// Feature rows in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub descriptor: FeatureDescriptor,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Nine significant digits, as written to the cache file.
fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// Rounds to what the cache file stores, so fresh and cached runs agree.
fn quantize(v: f64) -> f64 {
    format_value(v).parse().expect("formatted float parses")
}

impl FeatureTable {
    pub fn dimension(&self) -> usize {
        self.descriptor.dimension()
    }

    pub fn row_of(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|i| i == id).map(|p| self.rows[p].as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("utterance_id");
        for n in &self.descriptor.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format_value(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, preset: Preset) -> Result<Self, RunError> {
        let descriptor = preset_descriptor(preset);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| RunError::Cache("empty feature file".into()))?;
        let names: Vec<&str> = header.split(',').skip(1).collect();
        if names.len() != descriptor.dimension() || names.iter().zip(&descriptor.names).any(|(a, b)| a != b) {
            return Err(RunError::Cache(format!("header does not match the {preset} preset")));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let id = cells.next().unwrap_or_default().to_string();
            let row: Vec<f64> = cells
                .map(|c| c.parse::<f64>().map_err(|_| RunError::Cache(format!("row {}: bad number {c:?}", n + 1))))
                .collect::<Result<_, _>>()?;
            if row.len() != descriptor.dimension() {
                return Err(RunError::Cache(format!("row {}: {} values", n + 1, row.len())));
            }
            ids.push(id);
            rows.push(row);
        }
        Ok(Self { descriptor, ids, rows })
    }
}

/// Loads, preprocesses and featurizes every utterance. All failures are
/// collected; any failure fails the whole table.
pub fn extract_table(manifest: &Manifest, preset: Preset, cfg: &PreprocessConfig) -> Result<FeatureTable, RunError> {
    let results: Vec<Result<Vec<f64>, String>> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let clip = load_wav(&r.path).map_err(|e| e.to_string())?;
            let clip = preprocess(&clip, cfg).map_err(|e| e.to_string())?;
            let fv = extract_features(&r.utterance_id, &clip, preset).map_err(|e| e.to_string())?;
            Ok(fv.values.into_iter().map(quantize).collect())
        })
        .collect();
    let mut failures = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for (r, res) in manifest.records().iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push((r.utterance_id.clone(), msg)),
        }
    }
    if !failures.is_empty() {
        return Err(RunError::Extraction(failures));
    }
    Ok(FeatureTable {
        descriptor: preset_descriptor(preset),
        ids: manifest.records().iter().map(|r| r.utterance_id.clone()).collect(),
        rows,
    })
}

/// Extracts features and writes them as CSV to `out`.
pub fn cache_features(manifest: &Manifest, preset: Preset, out: &Path) -> Result<FeatureTable, RunError> {
    let table = extract_table(manifest, preset, &PreprocessConfig::default())?;
    fs::write(out, table.to_csv()).map_err(|source| RunError::Io { path: out.to_path_buf(), source })?;
    Ok(table)
}

/// Hex SHA-256 over the manifest records and the audio bytes they point to.
pub fn manifest_hash(manifest: &Manifest) -> Result<String, RunError> {
    let mut h = Sha256::new();
    for r in manifest.records() {
        for field in [r.utterance_id.as_str(), &r.path.to_string_lossy(), &r.corpus, &r.speaker_id, r.emotion.as_str()] {
            h.update(field.as_bytes());
            h.update([0u8]);
        }
        match fs::read(&r.path) {
            Ok(bytes) => h.update(&bytes),
            // Unreadable audio is reported by extraction with its utterance id.
            Err(_) => h.update(b"<missing>"),
        }
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn cache_path(dir: &Path, manifest: &Manifest, preset: Preset) -> Result<PathBuf, RunError> {
    Ok(dir.join(format!("features_{}_{preset}.csv", &manifest_hash(manifest)?[..16])))
}

/// Reads the cached table for `(manifest, preset)` or builds and stores it.
pub fn load_or_extract(manifest: &Manifest, preset: Preset, cache_dir: Option<&Path>) -> Result<FeatureTable, RunError> {
    let Some(dir) = cache_dir else {
        return extract_table(manifest, preset, &PreprocessConfig::default());
    };
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let path = cache_path(dir, manifest, preset)?;
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(table) = FeatureTable::from_csv(&text, preset) {
            let ids_match = table.ids.len() == manifest.len()
                && table.ids.iter().zip(manifest.records()).all(|(a, r)| *a == r.utterance_id);
            if ids_match {
                return Ok(table);
            }
        }
    }
    cache_features(manifest, preset, &path)
}
