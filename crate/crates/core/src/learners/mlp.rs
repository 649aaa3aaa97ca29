use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bce_logit, check_binary, sample_weights, sigmoid, ClassWeighting, LearnError, Matrix};

/// One hidden rectifier layer followed by a logistic output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    /// Row-major `hidden × input_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub l2: f64,
    pub seed: u64,
}

/// Gradient with the same layout as [`MlpModel`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpGrad {
    fn zeros(d: usize, h: usize) -> Self {
        Self { w1: vec![0.0; h * d], b1: vec![0.0; h], w2: vec![0.0; h], b2: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpOptions {
    pub hidden: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub weighting: ClassWeighting,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            hidden: 64,
            learning_rate: 1e-3,
            l2: 1e-4,
            weighting: ClassWeighting::None,
            max_epochs: 200,
            batch_size: 32,
            patience: 20,
            validation_fraction: 0.1,
        }
    }
}

const MIN_IMPROVEMENT: f64 = 1e-4;

impl MlpModel {
    /// Uniform initialization in ±1/sqrt(fan-in); biases start at zero.
    pub fn init(input_dim: usize, hidden: usize, l2: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = 1.0 / (input_dim.max(1) as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..hidden * input_dim).map(|_| rng.random_range(-s1..s1)).collect();
        let w2 = (0..hidden).map(|_| rng.random_range(-s2..s2)).collect();
        Self { input_dim, hidden, w1, b1: vec![0.0; hidden], w2, b2: 0.0, l2, seed }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn hidden_into(&self, x: &[f64], a: &mut [f64]) {
        for (j, out) in a.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            let pre = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *out = pre.max(0.0);
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut a = vec![0.0; self.hidden];
        self.hidden_into(x, &mut a);
        self.b2 + self.w2.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>()
    }

    fn params_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain([&self.b2]).all(|v| v.is_finite())
    }

    fn l2_term(&self) -> f64 {
        let s: f64 = self.w1.iter().chain(&self.w2).map(|w| w * w).sum();
        0.5 * self.l2 * s
    }

    /// Weighted cross-entropy over `idx` plus the l2 term; gradient into `g`.
    fn batch_loss_grad(&self, x: &Matrix, y: &[usize], sw: &[f64], idx: &[usize], g: &mut MlpGrad) -> f64 {
        let (d, h) = (self.input_dim, self.hidden);
        g.w1.iter_mut().chain(&mut g.b1).chain(&mut g.w2).for_each(|v| *v = 0.0);
        g.b2 = 0.0;
        let total: f64 = idx.iter().map(|&i| sw[i]).sum();
        let mut a = vec![0.0; h];
        let mut loss = 0.0;
        for &i in idx {
            let row = x.row(i);
            self.hidden_into(row, &mut a);
            let z = self.b2 + self.w2.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
            let t = y[i] as f64;
            loss += sw[i] * bce_logit(z, t);
            let r = sw[i] * (sigmoid(z) - t) / total;
            g.b2 += r;
            for j in 0..h {
                if a[j] <= 0.0 {
                    continue;
                }
                g.w2[j] += r * a[j];
                let back = r * self.w2[j];
                g.b1[j] += back;
                for (gw, v) in g.w1[j * d..(j + 1) * d].iter_mut().zip(row) {
                    *gw += back * v;
                }
            }
        }
        for (gw, w) in g.w1.iter_mut().zip(&self.w1) {
            *gw += self.l2 * w;
        }
        for (gw, w) in g.w2.iter_mut().zip(&self.w2) {
            *gw += self.l2 * w;
        }
        loss / total + self.l2_term()
    }

    fn mean_ce(&self, x: &Matrix, y: &[usize], sw: &[f64], idx: &[usize]) -> f64 {
        let total: f64 = idx.iter().map(|&i| sw[i]).sum();
        idx.iter().map(|&i| sw[i] * bce_logit(self.logit(x.row(i)), y[i] as f64)).sum::<f64>() / total
    }
}

/// Mean cross-entropy plus `(l2/2)·(||W1||² + ||w2||²)` over all rows, and its gradient.
pub fn mlp_loss_grad(model: &MlpModel, x: &Matrix, y: &[usize]) -> Result<(f64, MlpGrad), LearnError> {
    if x.cols() != model.input_dim {
        return Err(LearnError::DimensionMismatch { expected: model.input_dim, got: x.cols() });
    }
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let sw = vec![1.0; y.len()];
    let idx: Vec<usize> = (0..y.len()).collect();
    let mut g = MlpGrad::zeros(model.input_dim, model.hidden);
    let loss = model.batch_loss_grad(x, y, &sw, &idx, &mut g);
    Ok((loss, g))
}

struct Adam {
    m: MlpGrad,
    v: MlpGrad,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn update_block(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr_t: f64) {
        for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + Self::EPS);
        }
    }

    fn step(&mut self, model: &mut MlpModel, g: &MlpGrad) {
        self.t += 1;
        let lr_t = self.lr * (1.0 - Self::B2.powi(self.t)).sqrt() / (1.0 - Self::B1.powi(self.t));
        Self::update_block(&mut model.w1, &g.w1, &mut self.m.w1, &mut self.v.w1, lr_t);
        Self::update_block(&mut model.b1, &g.b1, &mut self.m.b1, &mut self.v.b1, lr_t);
        Self::update_block(&mut model.w2, &g.w2, &mut self.m.w2, &mut self.v.w2, lr_t);
        Self::update_block(
            std::slice::from_mut(&mut model.b2),
            &[g.b2],
            std::slice::from_mut(&mut self.m.b2),
            std::slice::from_mut(&mut self.v.b2),
            lr_t,
        );
    }
}

/// Splits off a seeded validation subset, keeping both classes in the rest.
fn carve_validation(y: &[usize], frac: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.shuffle(rng);
    let n_val = (y.len() as f64 * frac).round() as usize;
    if n_val == 0 {
        return (idx, Vec::new());
    }
    let (val, train) = idx.split_at(n_val);
    let ones = train.iter().filter(|&&i| y[i] == 1).count();
    if ones == 0 || ones == train.len() {
        return (idx, Vec::new());
    }
    (train.to_vec(), val.to_vec())
}

/// Mini-batch Adam on weighted cross-entropy with l2, with early stopping on a
/// held-out validation carve-out. The parameters with the best validation loss
/// are returned.
pub fn train_mlp(x: &Matrix, y: &[usize], opts: &MlpOptions, seed: u64) -> Result<MlpModel, LearnError> {
    check_binary(x, y)?;
    if opts.hidden == 0 || opts.batch_size == 0 {
        return Err(LearnError::InvalidHyper("hidden width and batch size must be positive".into()));
    }
    if !(opts.learning_rate > 0.0 && opts.learning_rate.is_finite() && opts.l2 >= 0.0 && opts.l2.is_finite()) {
        return Err(LearnError::InvalidHyper(format!("learning rate {} / l2 {}", opts.learning_rate, opts.l2)));
    }
    let sw = sample_weights(y, opts.weighting);
    let mut model = MlpModel::init(x.cols(), opts.hidden, opts.l2, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_da7a);
    let (mut train, val) = carve_validation(y, opts.validation_fraction, &mut rng);
    let mut adam = Adam {
        m: MlpGrad::zeros(x.cols(), opts.hidden),
        v: MlpGrad::zeros(x.cols(), opts.hidden),
        t: 0,
        lr: opts.learning_rate,
    };
    let mut grad = MlpGrad::zeros(x.cols(), opts.hidden);
    let mut best = (f64::INFINITY, model.clone());
    let mut stale = 0;
    for _ in 0..opts.max_epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(opts.batch_size) {
            let loss = model.batch_loss_grad(x, y, &sw, batch, &mut grad);
            if !loss.is_finite() {
                return Err(LearnError::NotFinite("mlp loss".into()));
            }
            adam.step(&mut model, &grad);
        }
        if !model.params_finite() {
            return Err(LearnError::NotFinite("mlp parameters".into()));
        }
        if val.is_empty() {
            continue;
        }
        let v = model.mean_ce(x, y, &sw, &val);
        if v < best.0 - MIN_IMPROVEMENT {
            best = (v, model.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= opts.patience {
                break;
            }
        }
    }
    if !val.is_empty() && best.0.is_finite() {
        model = best.1;
    }
    Ok(model)
}
