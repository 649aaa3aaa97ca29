use super::{bce_logit, check_binary, sample_weights, sigmoid, ClassWeighting, LearnError, Matrix};

/// L2-regularized logistic regression parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl LinearModel {
    pub fn zeros(d: usize, l2: f64) -> Self {
        Self { weights: vec![0.0; d], bias: 0.0, l2 }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LinearModel,
    /// Objective after every accepted step, starting with the initial point.
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted mean cross-entropy plus `(l2/2)·||w||²`, and its gradient.
/// The last gradient entry belongs to the bias.
pub fn logreg_loss_grad(model: &LinearModel, x: &Matrix, y: &[usize]) -> Result<(f64, Vec<f64>), LearnError> {
    let w = vec![1.0; y.len()];
    loss_grad_weighted(model, x, y, &w)
}

fn loss_grad_weighted(model: &LinearModel, x: &Matrix, y: &[usize], sw: &[f64]) -> Result<(f64, Vec<f64>), LearnError> {
    let d = model.weights.len();
    if x.cols() != d {
        return Err(LearnError::DimensionMismatch { expected: d, got: x.cols() });
    }
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let total: f64 = sw.iter().sum();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for i in 0..x.rows() {
        let row = x.row(i);
        let z = model.logit(row);
        let t = y[i] as f64;
        loss += sw[i] * bce_logit(z, t);
        let r = sw[i] * (sigmoid(z) - t);
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad[d] += r;
    }
    loss /= total;
    grad.iter_mut().for_each(|g| *g /= total);
    let mut reg = 0.0;
    for (g, w) in grad.iter_mut().zip(&model.weights) {
        *g += model.l2 * w;
        reg += w * w;
    }
    Ok((loss + 0.5 * model.l2 * reg, grad))
}

fn step(model: &LinearModel, dir: &[f64], alpha: f64) -> LinearModel {
    let d = model.weights.len();
    LinearModel {
        weights: model.weights.iter().zip(dir).map(|(w, g)| w - alpha * g).collect(),
        bias: model.bias - alpha * dir[d],
        l2: model.l2,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full-batch gradient descent from zero weights. The trial step comes from the
/// Barzilai-Borwein rule and is halved until the Armijo condition holds, so the
/// recorded losses never increase.
pub fn train_logistic(
    x: &Matrix,
    y: &[usize],
    l2: f64,
    weighting: ClassWeighting,
    tol: f64,
    max_iter: usize,
) -> Result<LogisticFit, LearnError> {
    check_binary(x, y)?;
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(LearnError::InvalidHyper(format!("l2 = {l2}")));
    }
    let sw = sample_weights(y, weighting);
    let mut model = LinearModel::zeros(x.cols(), l2);
    let (mut loss, mut grad) = loss_grad_weighted(&model, x, y, &sw)?;
    let mut losses = vec![loss];
    let mut alpha = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let gnorm2 = dot(&grad, &grad);
        if gnorm2.sqrt() < tol {
            converged = true;
            break;
        }
        let mut trial = step(&model, &grad, alpha);
        let mut next = loss_grad_weighted(&trial, x, y, &sw)?;
        let mut halvings = 0;
        while !(next.0 <= loss - 1e-4 * alpha * gnorm2) {
            halvings += 1;
            if halvings > 60 {
                // No further progress is representable.
                return finish(model, losses, iterations, true);
            }
            alpha *= 0.5;
            trial = step(&model, &grad, alpha);
            next = loss_grad_weighted(&trial, x, y, &sw)?;
        }
        let s: Vec<f64> = trial.weights.iter().zip(&model.weights).map(|(a, b)| a - b).chain([trial.bias - model.bias]).collect();
        let yk: Vec<f64> = next.1.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yk);
        alpha = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-10, 1e10) } else { alpha * 2.0 };
        model = trial;
        (loss, grad) = next;
        if !loss.is_finite() {
            return Err(LearnError::NotFinite("logistic loss".into()));
        }
        losses.push(loss);
        iterations += 1;
    }
    finish(model, losses, iterations, converged)
}

fn finish(model: LinearModel, losses: Vec<f64>, iterations: usize, converged: bool) -> Result<LogisticFit, LearnError> {
    if model.weights.iter().chain([&model.bias]).any(|v| !v.is_finite()) {
        return Err(LearnError::NotFinite("logistic parameters".into()));
    }
    Ok(LogisticFit { model, losses, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize, d: usize) -> (LinearModel, Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = Matrix::new(n, d, data).unwrap();
        let y = (0..n).map(|i| i % 2).collect();
        let m = LinearModel {
            weights: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-1.0..1.0),
            l2: rng.random_range(0.0..0.5),
        };
        (m, x, y)
    }

    #[test]
    fn zero_model_loss_is_ln2() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, -1.0]]).unwrap();
        let (loss, _) = logreg_loss_grad(&LinearModel::zeros(2, 0.3), &x, &[0, 1, 1]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn symmetric_data_gradients() {
        // Closed under (x, y) -> (-x, 1 - y): classes balance, so the bias
        // gradient vanishes at w = 0.
        let x = Matrix::from_rows(&[vec![1.5, -0.5], vec![-1.5, 0.5], vec![0.2, 2.0], vec![-0.2, -2.0]]).unwrap();
        let (_, g) = logreg_loss_grad(&LinearModel::zeros(2, 0.1), &x, &[1, 0, 0, 1]).unwrap();
        assert!(g[2].abs() < 1e-15, "{g:?}");
        // Closed under (x, y) -> (-x, y): the weight gradient vanishes too.
        let (_, g) = logreg_loss_grad(&LinearModel::zeros(2, 0.1), &x, &[1, 1, 0, 0]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15), "{g:?}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..20 {
            let (m, x, y) = random_instance(seed, 12, 4);
            let (_, g) = logreg_loss_grad(&m, &x, &y).unwrap();
            let h = 1e-5;
            for j in 0..=4 {
                let mut plus = m.clone();
                let mut minus = m.clone();
                if j < 4 {
                    plus.weights[j] += h;
                    minus.weights[j] -= h;
                } else {
                    plus.bias += h;
                    minus.bias -= h;
                }
                let fp = logreg_loss_grad(&plus, &x, &y).unwrap().0;
                let fm = logreg_loss_grad(&minus, &x, &y).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                let rel = (fd - g[j]).abs() / g[j].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-6, "seed {seed} j {j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn separable_1d() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let fit = train_logistic(&x, &[0, 1], 1e-3, ClassWeighting::None, 1e-6, 5000).unwrap();
        assert!(fit.model.logit(&[-1.0]) < 0.0 && fit.model.logit(&[1.0]) > 0.0);
        assert!(fit.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(train_logistic(&x, &[0, 0], 1e-3, ClassWeighting::None, 1e-6, 10), Err(LearnError::SingleClass));
    }

    #[test]
    fn non_finite_input_rejected() {
        let x = Matrix::from_rows(&[vec![f64::NAN], vec![1.0]]).unwrap();
        assert!(matches!(train_logistic(&x, &[0, 1], 1e-3, ClassWeighting::None, 1e-6, 10), Err(LearnError::NotFinite(_))));
    }

    #[test]
    fn deterministic_and_monotone() {
        let (_, x, _) = random_instance(7, 60, 5);
        let y: Vec<usize> = (0..60).map(|i| usize::from(x.row(i)[0] + 0.3 * x.row(i)[1] > 0.1)).collect();
        let a = train_logistic(&x, &y, 1e-2, ClassWeighting::Balanced, 1e-6, 5000).unwrap();
        let b = train_logistic(&x, &y, 1e-2, ClassWeighting::Balanced, 1e-6, 5000).unwrap();
        assert_eq!(a, b);
        assert!(a.converged);
        assert!(a.losses.windows(2).all(|w| w[1] <= w[0]));
    }
}
