//! Linear epsilon-insensitive support vector regression.
//!
//! Trains the L2-regularized, L2-loss primal
//!
//! ```text
//! min ½‖w̃‖² + C Σᵢ max(0, |yᵢ − w̃·x̃ᵢ| − ε)²
//! ```
//!
//! where `x̃ = (x, 1)` and `w̃ = (w, b)`, so the bias is regularized with the
//! weights. The solver is coordinate descent on the dual
//!
//! ```text
//! min_β ½ βᵀ(Q + λI)β − yᵀβ + ε‖β‖₁,   Q = X̃X̃ᵀ,  λ = 1/(2C)
//! ```
//!
//! with `w̃ = Σ βᵢ x̃ᵢ` kept up to date. Each coordinate step minimizes the
//! dual exactly in one variable, so the dual objective never increases.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl SvrModel {
    pub fn new(weights: Vec<f64>, bias: f64, epsilon: f64, c: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Validation("epsilon must be finite and ≥ 0".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Validation("C must be finite and > 0".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("regression weights must be finite".into()));
        }
        Ok(Self {
            weights,
            bias,
            epsilon,
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrOptions {
    pub c: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Stop once no dual variable moves by more than this in a full epoch.
    pub tolerance: f64,
    /// Seeds the per-epoch coordinate order.
    pub seed: u64,
}

impl Default for SvrOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            max_epochs: 1000,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrFit {
    pub model: SvrModel,
    pub dual: Vec<f64>,
    /// Dual objective after each epoch.
    pub dual_objective_history: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_problem<V: AsRef<[f64]>>(features: &[V], labels: &[f64]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::Validation("no training examples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].as_ref().len();
    for f in features {
        let f = f.as_ref();
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("feature vectors must be finite".into()));
        }
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::Numeric("labels must be finite".into()));
    }
    Ok(dim)
}

/// Dual objective for augmented weights `w̃ = Σ βᵢ x̃ᵢ`.
fn dual_objective(w_aug: &[f64], beta: &[f64], labels: &[f64], lambda: f64, epsilon: f64) -> f64 {
    let mut f = 0.5 * dot(w_aug, w_aug);
    for (b, y) in beta.iter().zip(labels) {
        f += 0.5 * lambda * b * b - y * b + epsilon * b.abs();
    }
    f
}

pub fn svr_train_with<V: AsRef<[f64]>>(features: &[V], labels: &[f64], opts: &SvrOptions) -> Result<SvrFit> {
    let dim = check_problem(features, labels)?;
    SvrModel::new(Vec::new(), 0.0, opts.epsilon, opts.c)?;
    let n = features.len();
    let lambda = 0.5 / opts.c;
    let eps = opts.epsilon;

    // augmented weights: w̃[..dim] = w, w̃[dim] = b
    let mut w = vec![0.0; dim + 1];
    let mut beta = vec![0.0; n];
    let diag: Vec<f64> = features
        .iter()
        .map(|x| dot(x.as_ref(), x.as_ref()) + 1.0 + lambda)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng(opts.seed);
    let mut history = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < opts.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut max_change: f64 = 0.0;
        for &i in &order {
            let x = features[i].as_ref();
            let pred = dot(&w[..dim], x) + w[dim];
            let g = -labels[i] + lambda * beta[i] + pred;
            let h = diag[i];
            let gp = g + eps;
            let gn = g - eps;
            let d = if gp < h * beta[i] {
                -gp / h
            } else if gn > h * beta[i] {
                -gn / h
            } else {
                -beta[i]
            };
            if d == 0.0 {
                continue;
            }
            beta[i] += d;
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj += d * xj;
            }
            w[dim] += d;
            max_change = max_change.max(d.abs());
        }
        history.push(dual_objective(&w, &beta, labels, lambda, eps));
        if max_change < opts.tolerance {
            converged = true;
            break;
        }
    }

    let bias = w.pop().expect("augmented bias");
    Ok(SvrFit {
        model: SvrModel::new(w, bias, eps, opts.c)?,
        dual: beta,
        dual_objective_history: history,
        epochs,
        converged,
    })
}

pub fn svr_train<V: AsRef<[f64]>>(features: &[V], labels: &[f64], c: f64, epsilon: f64) -> Result<SvrModel> {
    let opts = SvrOptions {
        c,
        epsilon,
        ..SvrOptions::default()
    };
    svr_train_with(features, labels, &opts).map(|f| f.model)
}

/// `w·x + b`.
pub fn svr_predict(model: &SvrModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    Ok(dot(&model.weights, x) + model.bias)
}

/// `½(‖w‖² + b²) + C Σ max(0, |y − ŷ| − ε)²`.
pub fn primal_objective<V: AsRef<[f64]>>(model: &SvrModel, features: &[V], labels: &[f64]) -> Result<f64> {
    check_problem(features, labels)?;
    let mut obj = 0.5 * (dot(&model.weights, &model.weights) + model.bias * model.bias);
    for (x, y) in features.iter().zip(labels) {
        let r = (y - svr_predict(model, x.as_ref())?).abs() - model.epsilon;
        if r > 0.0 {
            obj += model.c * r * r;
        }
    }
    Ok(obj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn constant_labels_zero_features() {
        let xs = vec![vec![0.0, 0.0]; 6];
        let ys = vec![2.5; 6];
        let m = svr_train(&xs, &ys, 1000.0, 0.1).unwrap();
        assert_eq!(m.weights, [0.0, 0.0]);
        let p = svr_predict(&m, &[0.0, 0.0]).unwrap();
        assert!((p - 2.5).abs() <= 0.1 + 1e-3, "prediction {p}");
    }

    /// Dense grid over (w, b) of the primal objective.
    fn grid_argmin(xs: &[f64], ys: &[f64], c: f64, eps: f64) -> (f64, f64) {
        let obj = |w: f64, b: f64| {
            0.5 * (w * w + b * b)
                + c * xs
                    .iter()
                    .zip(ys)
                    .map(|(x, y)| ((y - w * x - b).abs() - eps).max(0.0).powi(2))
                    .sum::<f64>()
        };
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..=800 {
            for j in 0..=400 {
                let w = 1.0 + i as f64 * 0.0025;
                let b = -1.0 + j as f64 * 0.005;
                let o = obj(w, b);
                if o < best.2 {
                    best = (w, b, o);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn recovers_slope_two() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        let (gw, _) = grid_argmin(&xs, &ys, 1000.0, 0.01);
        assert!((1.95..=2.05).contains(&gw));
        let feats: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let m = svr_train(&feats, &ys, 1000.0, 0.01).unwrap();
        assert!((1.95..=2.05).contains(&m.weights[0]), "w = {}", m.weights[0]);
        assert!((m.weights[0] - gw).abs() < 0.01);
    }

    #[test]
    fn predict_examples() {
        let m = SvrModel::new(vec![0.0, 0.0, 0.0], 2.5, 0.1, 1.0).unwrap();
        assert_eq!(svr_predict(&m, &[9.0, -3.0, 1.0]).unwrap(), 2.5);
        let m = SvrModel::new(vec![1.0, 1.0], 0.0, 0.1, 1.0).unwrap();
        assert_eq!(svr_predict(&m, &[2.0, 3.0]).unwrap(), 5.0);
        assert!(matches!(
            svr_predict(&m, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn input_errors() {
        assert!(svr_train::<Vec<f64>>(&[], &[], 1.0, 0.1).is_err());
        assert!(svr_train(&[vec![1.0]], &[1.0, 2.0], 1.0, 0.1).is_err());
        assert!(svr_train(&[vec![1.0]], &[f64::NAN], 1.0, 0.1).is_err());
        assert!(svr_train(&[vec![1.0]], &[1.0], 0.0, 0.1).is_err());
        assert!(svr_train(&[vec![1.0]], &[1.0], 1.0, -0.1).is_err());
    }

    fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut r = rng(seed);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let ys = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        (xs, ys)
    }

    #[test]
    fn strong_duality_at_convergence() {
        for seed in 0..10 {
            let (xs, ys) = random_problem(seed, 10, 5);
            let fit = svr_train_with(&xs, &ys, &SvrOptions::default()).unwrap();
            assert!(fit.converged);
            let primal = primal_objective(&fit.model, &xs, &ys).unwrap();
            let dual = *fit.dual_objective_history.last().unwrap();
            assert!((primal + dual).abs() <= 1e-7 * primal.abs().max(1.0), "{primal} vs {dual}");
        }
    }

    #[test]
    fn separable_data_fits_within_epsilon() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 4.0, (i % 3) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x[0] - 0.5 * x[1] + 2.0).collect();
        let m = svr_train(&xs, &ys, 1e4, 0.05).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y - svr_predict(&m, x).unwrap()).abs() <= 0.05 + 1e-3);
        }
    }

    #[test]
    fn duplicate_point_keeps_large_c_solution() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - 1.0).collect();
        let a = svr_train(&xs, &ys, 1e4, 0.01).unwrap();
        let mut xs2 = xs.clone();
        let mut ys2 = ys.clone();
        xs2.push(xs[2].clone());
        ys2.push(ys[2]);
        let b = svr_train(&xs2, &ys2, 1e4, 0.01).unwrap();
        assert!((a.weights[0] - b.weights[0]).abs() < 1e-2);
        assert!((a.bias - b.bias).abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn dual_objective_never_increases(seed in 0u64..500, c in 0.01f64..10.0) {
            let (xs, ys) = random_problem(seed, 12, 4);
            let opts = SvrOptions { c, ..SvrOptions::default() };
            let fit = svr_train_with(&xs, &ys, &opts).unwrap();
            for w in fit.dual_objective_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
        }

        #[test]
        fn prediction_is_affine(
            w in proptest::collection::vec(-3.0f64..3.0, 4),
            b in -3.0f64..3.0,
            x1 in proptest::collection::vec(-3.0f64..3.0, 4),
            x2 in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let m = SvrModel::new(w, b, 0.1, 1.0).unwrap();
            let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
            let lhs = svr_predict(&m, &sum).unwrap();
            let rhs = svr_predict(&m, &x1).unwrap() + svr_predict(&m, &x2).unwrap() - b;
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
