//! Speaker-grouped stratified folds and the self-corpus / 3-to-1
//! cross-corpus train/test splits built from them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Manifest;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("fold count must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("{groups} speakers cannot fill {k} folds")]
    TooFewGroups { groups: usize, k: usize },
    #[error("unknown corpus {0}")]
    UnknownCorpus(String),
    #[error("cross-corpus evaluation needs at least two corpora")]
    SingleCorpus,
    #[error("split leaks: {0}")]
    Leakage(String),
    #[error("{0}")]
    Inconsistent(String),
}

impl PartitionError {
    pub fn kind(&self) -> &'static str {
        match self {
            PartitionError::InvalidK(_) => "InvalidK",
            PartitionError::TooFewGroups { .. } => "TooFewGroups",
            PartitionError::UnknownCorpus(_) => "UnknownCorpus",
            PartitionError::SingleCorpus => "SingleCorpus",
            PartitionError::Leakage(_) => "Leakage",
            PartitionError::Inconsistent(_) => "Inconsistent",
        }
    }
}

/// Assigns each item to one of `k` folds so that items sharing a group land
/// in the same fold and per-fold class counts track the global proportions.
///
/// Groups are visited largest first (equal sizes in a seeded random order);
/// each goes to the fold whose squared deviation from the per-fold class
/// targets grows least. Remaining groups are forced into empty folds when
/// needed so no fold stays empty.
pub fn group_kfold_indices<G: Eq + Hash + Clone>(
    groups: &[G],
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, PartitionError> {
    if k < 2 {
        return Err(PartitionError::InvalidK(k));
    }
    if groups.len() != labels.len() {
        return Err(PartitionError::Inconsistent(format!("{} groups vs {} labels", groups.len(), labels.len())));
    }
    let n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);

    let mut order: Vec<G> = Vec::new();
    let mut members: HashMap<G, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for (i, (g, &y)) in groups.iter().zip(labels).enumerate() {
        let e = members.entry(g.clone()).or_insert_with(|| {
            order.push(g.clone());
            (Vec::new(), vec![0.0; n_classes])
        });
        e.0.push(i);
        e.1[y] += 1.0;
    }
    if order.len() < k {
        return Err(PartitionError::TooFewGroups { groups: order.len(), k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.sort_by_key(|g| std::cmp::Reverse(members[g].0.len()));

    let mut totals = vec![0.0; n_classes];
    for &y in labels {
        totals[y] += 1.0;
    }
    let target: Vec<f64> = totals.iter().map(|t| t / k as f64).collect();
    let mut counts = vec![vec![0.0; n_classes]; k];
    let mut sizes = vec![0usize; k];
    let mut fold_of = vec![usize::MAX; labels.len()];

    for (pos, g) in order.iter().enumerate() {
        let (idx, class_counts) = &members[g];
        let remaining = order.len() - pos;
        let empty: Vec<usize> = (0..k).filter(|&f| sizes[f] == 0).collect();
        let candidates: Vec<usize> = if empty.len() >= remaining { empty } else { (0..k).collect() };
        let cost = |f: usize| -> f64 {
            class_counts
                .iter()
                .zip(&counts[f])
                .zip(&target)
                .map(|((s, n), t)| s * (2.0 * (n - t) + s))
                .sum()
        };
        let best = candidates
            .iter()
            .copied()
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(sizes[a].cmp(&sizes[b])).then(a.cmp(&b)))
            .expect("at least one candidate fold");
        for (c, s) in class_counts.iter().enumerate() {
            counts[best][c] += s;
        }
        sizes[best] += idx.len();
        for &i in idx {
            fold_of[i] = best;
        }
    }
    Ok(fold_of)
}

/// Fold index per utterance of a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    /// `(utterance_id, fold)` in manifest order.
    pub folds: Vec<(String, usize)>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.folds.iter().find(|(u, _)| u == id).map(|(_, f)| *f)
    }

    pub fn fold_members(&self, fold: usize) -> Vec<String> {
        self.folds.iter().filter(|(_, f)| *f == fold).map(|(u, _)| u.clone()).collect()
    }

    /// `utterance_id,fold` audit CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("utterance_id,fold\n");
        for (u, f) in &self.folds {
            s.push_str(&format!("{u},{f}\n"));
        }
        s
    }
}

/// Stratified group k-fold over a manifest, grouping by speaker (within its
/// corpus) and stratifying on `labels[i]` for record `i`.
pub fn stratified_group_kfold(
    manifest: &Manifest,
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, PartitionError> {
    let groups: Vec<(String, String)> = manifest.records().iter().map(|r| r.speaker_key()).collect();
    let idx = group_kfold_indices(&groups, labels, k, seed)?;
    let folds = manifest.records().iter().zip(idx).map(|(r, f)| (r.utterance_id.clone(), f)).collect();
    Ok(FoldAssignment { k, seed, folds })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub description: String,
}

impl TrainTestSplit {
    /// Checks id disjointness, non-emptiness and that no speaker of the
    /// test corpus sits on both sides.
    pub fn check(&self, manifest: &Manifest) -> Result<(), PartitionError> {
        if self.train_ids.is_empty() || self.test_ids.is_empty() {
            return Err(PartitionError::Inconsistent(format!("{}: empty side", self.description)));
        }
        let test: HashSet<&str> = self.test_ids.iter().map(String::as_str).collect();
        if let Some(id) = self.train_ids.iter().find(|id| test.contains(id.as_str())) {
            return Err(PartitionError::Leakage(format!("{}: utterance {id} on both sides", self.description)));
        }
        let by_id: HashMap<&str, _> = manifest.records().iter().map(|r| (r.utterance_id.as_str(), r)).collect();
        let speakers = |ids: &[String]| -> Result<HashSet<(String, String)>, PartitionError> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|r| r.speaker_key())
                        .ok_or_else(|| PartitionError::Inconsistent(format!("unknown utterance {id}")))
                })
                .collect()
        };
        let test_speakers = speakers(&self.test_ids)?;
        let train_speakers = speakers(&self.train_ids)?;
        if let Some(s) = test_speakers.intersection(&train_speakers).next() {
            return Err(PartitionError::Leakage(format!(
                "{}: speaker {}/{} on both sides",
                self.description, s.0, s.1
            )));
        }
        Ok(())
    }
}

/// Split `i` tests on fold `i` and trains on the rest.
pub fn self_corpus_splits(assignment: &FoldAssignment) -> Vec<TrainTestSplit> {
    (0..assignment.k)
        .map(|i| {
            let (test, train): (Vec<_>, Vec<_>) = assignment.folds.iter().partition(|(_, f)| *f == i);
            TrainTestSplit {
                train_ids: train.into_iter().map(|(u, _)| u.clone()).collect(),
                test_ids: test.into_iter().map(|(u, _)| u.clone()).collect(),
                description: format!("self fold {i}/{}", assignment.k),
            }
        })
        .collect()
}

/// 3-to-1 style splits: every non-target utterance plus the target's
/// training folds on the train side, one target fold on the test side.
pub fn cross_corpus_splits(
    target: &str,
    manifest: &Manifest,
    assignment: &FoldAssignment,
    k: usize,
) -> Result<Vec<TrainTestSplit>, PartitionError> {
    let corpora = manifest.corpora();
    if !corpora.iter().any(|c| c == target) {
        return Err(PartitionError::UnknownCorpus(target.to_string()));
    }
    if corpora.len() < 2 {
        return Err(PartitionError::SingleCorpus);
    }
    if assignment.k != k {
        return Err(PartitionError::Inconsistent(format!("assignment has {} folds, expected {k}", assignment.k)));
    }
    let fold_of: BTreeMap<&str, usize> = assignment.folds.iter().map(|(u, f)| (u.as_str(), *f)).collect();
    let others: Vec<String> =
        manifest.records().iter().filter(|r| r.corpus != target).map(|r| r.utterance_id.clone()).collect();
    let target_ids: Vec<&str> =
        manifest.records().iter().filter(|r| r.corpus == target).map(|r| r.utterance_id.as_str()).collect();
    if let Some(id) = target_ids.iter().find(|id| !fold_of.contains_key(*id)) {
        return Err(PartitionError::Inconsistent(format!("target utterance {id} has no fold")));
    }
    let sources: Vec<&String> = corpora.iter().filter(|c| *c != target).collect();
    Ok((0..k)
        .map(|i| {
            let mut train_ids = others.clone();
            let mut test_ids = Vec::new();
            for &id in &target_ids {
                if fold_of[id] == i {
                    test_ids.push(id.to_string());
                } else {
                    train_ids.push(id.to_string());
                }
            }
            TrainTestSplit {
                train_ids,
                test_ids,
                description: format!(
                    "cross target {target} fold {i}/{k}; train {} + {target} other folds",
                    sources.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" + ")
                ),
            }
        })
        .collect())
}
