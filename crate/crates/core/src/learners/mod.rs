//! Feature standardization, logistic regression, a one-hidden-layer MLP and
//! hyperparameter search. All training is deterministic given its inputs and
//! seed.

mod io;
mod logistic;
mod mlp;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_model, parse_model, save_model, serialize_model};
pub use logistic::{logreg_loss_grad, train_logistic, LinearModel, LogisticFit};
pub use mlp::{mlp_loss_grad, train_mlp, MlpGrad, MlpModel, MlpOptions};
pub use search::{search_hyperparams, CandidateScore, SearchResult};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite value during training: {0}")]
    NotFinite(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("inner search: {0}")]
    Search(String),
}

impl LearnError {
    pub fn kind(&self) -> &'static str {
        match self {
            LearnError::DimensionMismatch { .. } => "DimensionMismatch",
            LearnError::SingleClass => "SingleClass",
            LearnError::NotFinite(_) => "NotFinite",
            LearnError::TooFewRows { .. } => "TooFewRows",
            LearnError::EmptyGrid => "EmptyGrid",
            LearnError::InvalidHyper(_) => "InvalidHyper",
            LearnError::ModelFormat(_) => "ModelFormat",
            LearnError::Search(_) => "Search",
        }
    }
}

/// Dense row-major matrix of feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LearnError> {
        if data.len() != rows * cols {
            return Err(LearnError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LearnError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LearnError::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    fn check_finite(&self) -> Result<(), LearnError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(LearnError::NotFinite(format!("input row {} column {}", p / self.cols, p % self.cols))),
            None => Ok(()),
        }
    }
}

/// Per-feature standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population mean and standard deviation of each column.
    pub fn fit(x: &Matrix) -> Result<Self, LearnError> {
        if x.rows() < 2 {
            return Err(LearnError::TooFewRows { needed: 2, got: x.rows() });
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    /// Identity transform of dimension `d`.
    pub fn identity(d: usize) -> Self {
        Self { mean: vec![0.0; d], std: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Columns with zero spread map to 0.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix, LearnError> {
        if x.cols() != self.dim() {
            return Err(LearnError::DimensionMismatch { expected: self.dim(), got: x.cols() });
        }
        let mut data = Vec::with_capacity(x.data.len());
        for i in 0..x.rows() {
            for ((v, m), s) in x.row(i).iter().zip(&self.mean).zip(&self.std) {
                data.push(if *s > 0.0 { (v - m) / s } else { 0.0 });
            }
        }
        Ok(Matrix { rows: x.rows, cols: x.cols, data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    None,
    /// Inverse class frequency, normalized to mean weight 1.
    Balanced,
}

impl FromStr for ClassWeighting {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "off" | "false" => Ok(ClassWeighting::None),
            "balanced" | "on" | "true" => Ok(ClassWeighting::Balanced),
            other => Err(LearnError::InvalidHyper(format!("class weighting {other:?}"))),
        }
    }
}

/// Per-row loss weights.
pub(crate) fn sample_weights(y: &[usize], mode: ClassWeighting) -> Vec<f64> {
    match mode {
        ClassWeighting::None => vec![1.0; y.len()],
        ClassWeighting::Balanced => {
            let n1 = y.iter().filter(|&&v| v == 1).count() as f64;
            let n0 = y.len() as f64 - n1;
            let n = y.len() as f64;
            y.iter().map(|&v| if v == 1 { n / (2.0 * n1) } else { n / (2.0 * n0) }).collect()
        }
    }
}

pub(crate) fn check_binary(x: &Matrix, y: &[usize]) -> Result<(), LearnError> {
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(LearnError::InvalidHyper(format!("label {bad} is not binary")));
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(LearnError::SingleClass);
    }
    x.check_finite()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of logit `z` against label `y`, stable for large |z|.
pub(crate) fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Logreg,
    Mlp,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Logreg => "logreg",
            ModelFamily::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" | "lr" => Ok(ModelFamily::Logreg),
            "mlp" => Ok(ModelFamily::Mlp),
            other => Err(LearnError::InvalidHyper(format!("model family {other:?}"))),
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyper {
    Logreg { l2: f64 },
    Mlp { hidden: usize, learning_rate: f64, l2: f64 },
}

impl Hyper {
    pub fn family(&self) -> ModelFamily {
        match self {
            Hyper::Logreg { .. } => ModelFamily::Logreg,
            Hyper::Mlp { .. } => ModelFamily::Mlp,
        }
    }

    pub fn l2(&self) -> f64 {
        match *self {
            Hyper::Logreg { l2 } | Hyper::Mlp { l2, .. } => l2,
        }
    }

    /// Hidden width (0 for linear models).
    pub fn size(&self) -> usize {
        match *self {
            Hyper::Logreg { .. } => 0,
            Hyper::Mlp { hidden, .. } => hidden,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "n_draws")]
pub enum SearchMode {
    Grid,
    Randomized(usize),
}

impl FromStr for SearchMode {
    type Err = LearnError;

    /// `grid`, or `randomized:<n_draws>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "grid" => Ok(SearchMode::Grid),
            Some(("randomized", n)) => n
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .map(SearchMode::Randomized)
                .ok_or_else(|| LearnError::InvalidHyper(format!("search mode {s:?}"))),
            _ => Err(LearnError::InvalidHyper(format!("search mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub candidates: Vec<Hyper>,
    pub mode: SearchMode,
}

impl HyperGrid {
    /// `l2 ∈ {1e-4, 1e-3, 1e-2, 1e-1, 1}`.
    pub fn logistic_default() -> Self {
        let candidates = [1e-4, 1e-3, 1e-2, 1e-1, 1.0].iter().map(|&l2| Hyper::Logreg { l2 }).collect();
        Self { candidates, mode: SearchMode::Grid }
    }

    /// `hidden ∈ {32, 64, 128} × lr ∈ {1e-3, 1e-2} × l2 ∈ {1e-4, 1e-3}`.
    pub fn mlp_default() -> Self {
        let mut candidates = Vec::new();
        for hidden in [32, 64, 128] {
            for learning_rate in [1e-3, 1e-2] {
                for l2 in [1e-4, 1e-3] {
                    candidates.push(Hyper::Mlp { hidden, learning_rate, l2 });
                }
            }
        }
        Self { candidates, mode: SearchMode::Grid }
    }

    pub fn default_for(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Logreg => Self::logistic_default(),
            ModelFamily::Mlp => Self::mlp_default(),
        }
    }

    pub fn single(h: Hyper) -> Self {
        Self { candidates: vec![h], mode: SearchMode::Grid }
    }
}

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(LinearModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Logistic(m) => m.weights.len(),
            Model::Mlp(m) => m.input_dim(),
        }
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Logistic(m) => sigmoid(m.logit(x)),
            Model::Mlp(m) => sigmoid(m.logit(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    /// Positive-class probability per row.
    pub scores: Vec<f64>,
}

/// Scores every row; label 1 iff the score is at least 0.5.
pub fn predict(model: &Model, x: &Matrix) -> Result<Predictions, LearnError> {
    if x.cols() != model.dim() {
        return Err(LearnError::DimensionMismatch { expected: model.dim(), got: x.cols() });
    }
    let scores: Vec<f64> = (0..x.rows()).map(|i| model.score_row(x.row(i))).collect();
    let labels = scores.iter().map(|&s| usize::from(s >= 0.5)).collect();
    Ok(Predictions { labels, scores })
}

/// Trains one candidate on the given rows.
pub fn fit(hyper: &Hyper, x: &Matrix, y: &[usize], weighting: ClassWeighting, seed: u64) -> Result<Model, LearnError> {
    match *hyper {
        Hyper::Logreg { l2 } => Ok(Model::Logistic(train_logistic(x, y, l2, weighting, 1e-6, 5000)?.model)),
        Hyper::Mlp { hidden, learning_rate, l2 } => {
            let opts = MlpOptions { hidden, learning_rate, l2, weighting, ..MlpOptions::default() };
            Ok(Model::Mlp(train_mlp(x, y, &opts, seed)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scaler_hand_example() {
        let x = Matrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let s = Scaler::fit(&x).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.std, vec![1.0]);
        let t = s.transform(&x).unwrap();
        assert_eq!(t.row(0), &[-1.0]);
        assert_eq!(t.row(1), &[1.0]);
    }

    #[test]
    fn scaler_constant_column_and_errors() {
        let x = Matrix::from_rows(&[vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 4.0]]).unwrap();
        let s = Scaler::fit(&x).unwrap();
        let t = s.transform(&x).unwrap();
        assert!((0..3).all(|i| t.row(i)[0] == 0.0));
        let one = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(Scaler::fit(&one), Err(LearnError::TooFewRows { needed: 2, got: 1 }));
        let wrong = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(s.transform(&wrong), Err(LearnError::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_logistic_scores_half() {
        let m = Model::Logistic(LinearModel { weights: vec![0.0; 3], bias: 0.0, l2: 0.0 });
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let p = predict(&m, &x).unwrap();
        assert_eq!(p.scores, vec![0.5, 0.5]);
        assert_eq!(p.labels, vec![1, 1]);
        let bad = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(predict(&m, &bad), Err(LearnError::DimensionMismatch { .. })));
    }

    #[test]
    fn parse_enums() {
        assert_eq!("randomized:4".parse::<SearchMode>().unwrap(), SearchMode::Randomized(4));
        assert_eq!("grid".parse::<SearchMode>().unwrap(), SearchMode::Grid);
        assert!("randomized:0".parse::<SearchMode>().is_err());
        assert_eq!("mlp".parse::<ModelFamily>().unwrap(), ModelFamily::Mlp);
        assert_eq!(HyperGrid::mlp_default().candidates.len(), 12);
        assert_eq!(HyperGrid::logistic_default().candidates.len(), 5);
    }

    #[test]
    fn balanced_weights() {
        let w = sample_weights(&[0, 0, 0, 1], ClassWeighting::Balanced);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert!((w[3] - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn transform_centres(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let x = Matrix::from_rows(&rows).unwrap();
            let t = Scaler::fit(&x).unwrap().transform(&x).unwrap();
            for c in 0..3 {
                let m: f64 = (0..t.rows()).map(|i| t.row(i)[c]).sum::<f64>() / t.rows() as f64;
                prop_assert!(m.abs() < 1e-9);
            }
        }

        #[test]
        fn logistic_score_monotone(w in -5.0f64..5.0, b in -3.0f64..3.0, x0 in -10.0f64..10.0, dx in 0.0f64..10.0) {
            let m = Model::Logistic(LinearModel { weights: vec![w.abs()], bias: b, l2: 0.0 });
            let x = Matrix::from_rows(&[vec![x0], vec![x0 + dx]]).unwrap();
            let p = predict(&m, &x).unwrap();
            prop_assert!(p.scores[1] >= p.scores[0]);
            prop_assert!(p.scores.iter().all(|&s| s > 0.0 && s < 1.0 || s == 0.0 || s == 1.0));
        }
    }
}
