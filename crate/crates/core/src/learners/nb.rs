use serde::{Deserialize, Serialize};

use super::features::{window_features, FeatureMatrix, Scaling};
use crate::error::{Error, Result};

pub const NB_SCHEMA: &str = "nb-v1";
pub const DEFAULT_VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over independent per-feature normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveBayes {
    pub schema: String,
    pub scaling: Scaling,
    pub log_prior_pos: f64,
    pub log_prior_neg: f64,
    pub mean_pos: Vec<f64>,
    pub var_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub var_neg: Vec<f64>,
}

fn moments(x: &FeatureMatrix, class: u8, floor: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let d = x.n_cols;
    let rows: Vec<usize> = (0..x.n_rows).filter(|&i| x.labels[i] == class).collect();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in &rows {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for &i in &rows {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    var.iter_mut().for_each(|s| *s = (*s / n).max(floor));
    (mean, var, rows.len())
}

pub fn train_naive_bayes(x: &FeatureMatrix, scaling: Scaling, var_floor: f64) -> Result<NaiveBayes> {
    if !x.has_both_classes() {
        return Err(Error::Training("naive Bayes needs both classes".into()));
    }
    let (mean_pos, var_pos, n_pos) = moments(x, 1, var_floor);
    let (mean_neg, var_neg, n_neg) = moments(x, 0, var_floor);
    let n = x.n_rows as f64;
    Ok(NaiveBayes {
        schema: NB_SCHEMA.into(),
        scaling,
        log_prior_pos: (n_pos as f64 / n).ln(),
        log_prior_neg: (n_neg as f64 / n).ln(),
        mean_pos,
        var_pos,
        mean_neg,
        var_neg,
    })
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

impl NaiveBayes {
    /// `ln P(pos | x) − ln P(neg | x)`.
    pub fn score_features(&self, x: &[f64]) -> f64 {
        let mut s = self.log_prior_pos - self.log_prior_neg;
        for (j, &v) in x.iter().enumerate() {
            s += log_normal_pdf(v, self.mean_pos[j], self.var_pos[j])
                - log_normal_pdf(v, self.mean_neg[j], self.var_neg[j]);
        }
        s
    }

    pub fn score_window(&self, prices: &[f64]) -> Result<f64> {
        let x = window_features(prices, self.scaling)?;
        super::check_dims(x.len(), self.mean_pos.len())?;
        Ok(self.score_features(&x))
    }
}
