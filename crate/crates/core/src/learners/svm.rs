use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{window_features, FeatureMatrix, Scaling};
use crate::error::{invalid_config, Error, Result};
use crate::rng;

pub const SVM_SCHEMA: &str = "svm-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearKind {
    Svm,
    NbDerived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub epochs: usize,
    pub lr: f64,
    pub c: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: 0.01,
            c: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    pub schema: String,
    pub kind: LinearKind,
    pub scaling: Scaling,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Per-sample SGD on `½‖w‖² + C·Σ max(0, 1 − y(w·x + b))` with labels in
/// {−1, +1}. The regulariser is spread evenly over the `n` samples of an
/// epoch; the bias is not regularised. Starts from zero.
pub fn train_linear_svm(x: &FeatureMatrix, scaling: Scaling, cfg: &SvmConfig) -> Result<LinearModel> {
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) || !(cfg.c >= 0.0 && cfg.c.is_finite()) {
        return Err(invalid_config(format!("svm lr {} / C {}", cfg.lr, cfg.c)));
    }
    if !x.has_both_classes() {
        return Err(Error::Training("linear SVM needs both classes".into()));
    }
    let n = x.n_rows;
    let inv_n = 1.0 / n as f64;
    let mut w = vec![0.0; x.n_cols];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(cfg.seed, rng::TRAIN, epoch as u64));
        for &i in &order {
            let xi = x.row(i);
            let y = if x.labels[i] == 1 { 1.0 } else { -1.0 };
            let margin = y * (dot(&w, xi) + b);
            let violated = margin < 1.0;
            for (wj, xj) in w.iter_mut().zip(xi) {
                let hinge = if violated { cfg.c * y * xj } else { 0.0 };
                *wj -= cfg.lr * (*wj * inv_n - hinge);
            }
            if violated {
                b += cfg.lr * cfg.c * y;
            }
        }
        if !(b.is_finite() && w.iter().all(|v| v.is_finite())) {
            return Err(Error::Diverged(format!("linear SVM weights non-finite after epoch {epoch}")));
        }
    }
    Ok(LinearModel {
        schema: SVM_SCHEMA.into(),
        kind: LinearKind::Svm,
        scaling,
        weights: w,
        bias: b,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearModel {
    /// Signed margin `w·x + b`.
    pub fn score_features(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score_window(&self, prices: &[f64]) -> Result<f64> {
        let x = window_features(prices, self.scaling)?;
        super::check_dims(x.len(), self.weights.len())?;
        Ok(self.score_features(&x))
    }

    /// Rows with `y(w·x + b) < 1 − tol`.
    pub fn hinge_violations(&self, x: &FeatureMatrix, tol: f64) -> usize {
        (0..x.n_rows)
            .filter(|&i| {
                let y = if x.labels[i] == 1 { 1.0 } else { -1.0 };
                y * self.score_features(x.row(i)) < 1.0 - tol
            })
            .count()
    }
}
