//! Confusion matrices, unweighted average recall and Fleiss' kappa.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} true labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("class {0} has no true instances")]
    AbsentClass(usize),
    #[error("invalid rating counts: {0}")]
    InvalidCounts(String),
}

impl MetricError {
    pub fn kind(&self) -> &'static str {
        match self {
            MetricError::LengthMismatch(..) => "LengthMismatch",
            MetricError::LabelOutOfRange { .. } => "LabelOutOfRange",
            MetricError::AbsentClass(_) => "AbsentClass",
            MetricError::InvalidCounts(_) => "InvalidCounts",
        }
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self { counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Recall of each class; `None` for classes without true instances.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        (0..self.n_classes())
            .map(|c| {
                let r = self.row_sum(c);
                (r > 0).then(|| self.counts[c][c] as f64 / r as f64)
            })
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            return 0.0;
        }
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum::<u64>() as f64 / t as f64
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(MetricError::LabelOutOfRange { label, n_classes });
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

/// Mean of per-class recalls.
///
/// Computed as one exact rational `sum_c hit_c * prod_{j!=c} n_j / (C * prod_j n_j)`
/// when it fits in 128 bits, so that e.g. `[[9,1],[2,8]]` gives exactly
/// 0.85; falls back to a floating-point mean otherwise.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    let k = cm.n_classes();
    let rows: Vec<u64> = (0..k).map(|c| cm.row_sum(c)).collect();
    if let Some(c) = rows.iter().position(|&r| r == 0) {
        return Err(MetricError::AbsentClass(c));
    }
    if k == 0 {
        return Err(MetricError::AbsentClass(0));
    }
    let exact = || -> Option<f64> {
        let prod = rows.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))?;
        let mut num = 0u128;
        for c in 0..k {
            let term = (cm.counts[c][c] as u128).checked_mul(prod / rows[c] as u128)?;
            num = num.checked_add(term)?;
        }
        let den = prod.checked_mul(k as u128)?;
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        // exact as long as both fit in an f64 mantissa
        (num < (1u128 << 53) && den < (1u128 << 53)).then(|| num as f64 / den as f64)
    };
    Ok(exact().unwrap_or_else(|| {
        (0..k).map(|c| cm.counts[c][c] as f64 / rows[c] as f64).sum::<f64>() / k as f64
    }))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Item × category rating counts with a constant number of raters per item.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaInput {
    pub counts: Vec<Vec<u64>>,
    pub raters: u64,
}

impl KappaInput {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        let raters = counts.first().map(|r| r.iter().sum()).unwrap_or(0);
        let input = Self { counts, raters };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.raters < 2 {
            return Err(MetricError::InvalidCounts(format!("{} raters per item, need at least 2", self.raters)));
        }
        if self.counts.len() < 2 {
            return Err(MetricError::InvalidCounts(format!("{} items, need at least 2", self.counts.len())));
        }
        let width = self.counts[0].len();
        for (i, row) in self.counts.iter().enumerate() {
            if row.len() != width {
                return Err(MetricError::InvalidCounts(format!("item {i} has {} categories, expected {width}", row.len())));
            }
            let s: u64 = row.iter().sum();
            if s != self.raters {
                return Err(MetricError::InvalidCounts(format!("item {i} has {s} ratings, expected {}", self.raters)));
            }
        }
        Ok(())
    }
}

/// Fleiss' kappa.
pub fn fleiss_kappa(input: &KappaInput) -> Result<f64, MetricError> {
    input.validate()?;
    let n = input.raters as f64;
    let items = input.counts.len() as f64;
    let cats = input.counts[0].len();
    let p_items: Vec<f64> = input
        .counts
        .iter()
        .map(|row| (row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n) / (n * (n - 1.0)))
        .collect();
    let p_bar = p_items.iter().sum::<f64>() / items;
    let p_e: f64 = (0..cats)
        .map(|j| {
            let share = input.counts.iter().map(|r| r[j]).sum::<u64>() as f64 / (items * n);
            share * share
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        // every rating in one category: agreement is perfect by construction
        return Ok(if (p_bar - 1.0).abs() < 1e-15 { 1.0 } else { 0.0 });
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Conventional verbal band for a kappa value.
pub fn kappa_band(kappa: f64) -> &'static str {
    match kappa {
        k if k < 0.0 => "poor agreement",
        k if k <= 0.20 => "slight agreement",
        k if k <= 0.40 => "fair agreement",
        k if k <= 0.60 => "moderate agreement",
        k if k <= 0.80 => "substantial agreement",
        _ => "almost perfect agreement",
    }
}
