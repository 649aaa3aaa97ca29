use std::hash::Hash;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, predict, ClassWeighting, Hyper, HyperGrid, LearnError, Matrix, SearchMode};
use crate::metrics::{confusion_matrix, uar};
use crate::partition::group_kfold_indices;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub hyper: Hyper,
    pub mean_uar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Hyper,
    /// Evaluated candidates in grid order.
    pub scores: Vec<CandidateScore>,
}

/// Candidates to evaluate, in grid order.
fn draw(grid: &HyperGrid, seed: u64) -> Vec<Hyper> {
    match grid.mode {
        SearchMode::Grid => grid.candidates.clone(),
        SearchMode::Randomized(n) => {
            let n = n.min(grid.candidates.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = sample(&mut rng, grid.candidates.len(), n).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| grid.candidates[i]).collect()
        }
    }
}

/// `a` beats `b` on equal score when it is smaller: lower hidden width, then
/// stronger regularization.
fn prefer_smaller(a: &Hyper, b: &Hyper) -> bool {
    (a.size(), -a.l2()) < (b.size(), -b.l2())
}

/// Scores every candidate by mean UAR over speaker-grouped inner folds of the
/// training rows and returns the best. Inner folds whose train or test part
/// holds a single class are skipped.
pub fn search_hyperparams<G: Eq + Hash + Clone + Sync>(
    grid: &HyperGrid,
    x: &Matrix,
    y: &[usize],
    groups: &[G],
    inner_k: usize,
    weighting: ClassWeighting,
    seed: u64,
) -> Result<SearchResult, LearnError> {
    if grid.candidates.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    if groups.len() != x.rows() || y.len() != x.rows() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), got: groups.len().min(y.len()) });
    }
    let candidates = draw(grid, seed::derive(seed, &[u64::MAX]));
    if candidates.len() == 1 && grid.candidates.len() == 1 {
        return Ok(SearchResult { best: candidates[0], scores: Vec::new() });
    }
    let fold_of = group_kfold_indices(groups, y, inner_k, seed).map_err(|e| LearnError::Search(e.to_string()))?;
    let mut splits = Vec::new();
    for f in 0..inner_k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| fold_of[i] == f);
        let two = |idx: &[usize]| idx.iter().any(|&i| y[i] == 0) && idx.iter().any(|&i| y[i] == 1);
        if two(&train) && two(&test) {
            splits.push((f, x.select(&train), train.iter().map(|&i| y[i]).collect::<Vec<_>>(), x.select(&test), test));
        }
    }
    if splits.is_empty() {
        return Err(LearnError::Search("no inner fold holds both classes".into()));
    }

    let scores: Vec<CandidateScore> = candidates
        .par_iter()
        .enumerate()
        .map(|(c, hyper)| {
            let mut total = 0.0;
            for (f, xtr, ytr, xte, test) in &splits {
                let model = fit(hyper, xtr, ytr, weighting, seed::derive(seed, &[c as u64, *f as u64]))?;
                let pred = predict(&model, xte)?;
                let truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
                let cm = confusion_matrix(&truth, &pred.labels, 2).map_err(|e| LearnError::Search(e.to_string()))?;
                total += uar(&cm).map_err(|e| LearnError::Search(e.to_string()))?;
            }
            Ok(CandidateScore { hyper: *hyper, mean_uar: total / splits.len() as f64 })
        })
        .collect::<Result<_, LearnError>>()?;

    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.mean_uar > best.mean_uar || (s.mean_uar == best.mean_uar && prefer_smaller(&s.hyper, &best.hyper)) {
            best = s;
        }
    }
    Ok(SearchResult { best: best.hyper, scores })
}
