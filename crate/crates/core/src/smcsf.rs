//! Pattern-count regression: pick the patterns whose occurrence rates differ
//! most between positive and negative windows, fit ridge weights on their
//! per-window counts, and select windows whose score clears a threshold set
//! on a validation split.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::PredictionSet;
use crate::dataset::{shuffled_split, Dataset, LabeledWindow};
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::exec::Exec;
use crate::patterns::{
    count_occurrences, effectiveness_scores, enumerate_vocabulary, occurrence_table_with, up_flags,
    SignPattern,
};

pub const SMCSF_SCHEMA: &str = "smcsf-v1";
pub const MODEL_NAME: &str = "sm-csf";
pub const MIN_TRAIN_WINDOWS: usize = 200;
pub const FALLBACK_FLAG: &str = "fallback-top-k";
pub const RATE_FLAG: &str = "tied-threshold";

/// Largest tolerated `‖(G + D)w − h‖∞` of the solved normal equations.
pub const RIDGE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// {0, 1} label.
    #[default]
    Label,
    /// Realised next-step return.
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    #[default]
    Counts,
    /// 1 if the pattern occurs at least once.
    Presence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmCsfConfig {
    pub window_sizes: Vec<usize>,
    pub alpha: f64,
    pub tau: f64,
    pub ridge_lambda: f64,
    pub selection_rate: f64,
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub fallback_top_k: usize,
    pub target: Target,
    pub features: FeatureMode,
}

impl Default for SmCsfConfig {
    fn default() -> Self {
        Self {
            window_sizes: vec![4, 5, 6, 7],
            alpha: 1.0,
            tau: 0.5,
            ridge_lambda: 1e-3,
            selection_rate: 0.2,
            validation_fraction: 0.25,
            split_seed: 0,
            fallback_top_k: 10,
            target: Target::Label,
            features: FeatureMode::Counts,
        }
    }
}

impl SmCsfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_sizes.is_empty() {
            return Err(invalid_config("window_sizes is empty"));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid_config(format!("alpha {} must be > 0", self.alpha)));
        }
        if !(self.tau >= 0.0) {
            return Err(invalid_config(format!("tau {} must be >= 0", self.tau)));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(invalid_config(format!("ridge_lambda {} must be >= 0", self.ridge_lambda)));
        }
        for (name, v) in [
            ("selection_rate", self.selection_rate),
            ("validation_fraction", self.validation_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid_config(format!("{name} {v} must lie in (0, 1)")));
            }
        }
        if self.fallback_top_k == 0 {
            return Err(invalid_config("fallback_top_k must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainProvenance {
    pub config: SmCsfConfig,
    pub dataset_fingerprint: String,
    pub n_fit: usize,
    pub n_validation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedSmCsf {
    pub schema: String,
    pub window: usize,
    pub effective_patterns: Vec<SignPattern>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub score_threshold: f64,
    pub features: FeatureMode,
    pub fallback_used: bool,
    /// Share of validation windows scoring above the threshold.
    pub validation_selected_fraction: f64,
    pub ridge_residual: f64,
    pub provenance: TrainProvenance,
}

/// Solution of the ridge normal equations with an unpenalised intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// `‖(G + D)β − h‖∞` of the averaged system.
    pub residual: f64,
}

/// Minimises `(1/n)·Σ(y − b − x·w)² + λ‖w‖²`.
///
/// Solved through `(XᵀX/n + D)β = Xᵀy/n` with `β = (b, w)` and `D = diag(0, λ, …, λ)`.
/// Averaging keeps λ on the same scale whatever the row count, so
/// repeating every row leaves the solution unchanged.
pub fn fit_ridge(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeFit> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(invalid_input(format!("{n} feature rows for {} targets", y.len())));
    }
    let p = rows[0].len() + 1;
    if rows.iter().any(|r| r.len() + 1 != p) {
        return Err(invalid_input("feature rows differ in length"));
    }
    let mut g = DMatrix::<f64>::zeros(p, p);
    let mut h = DVector::<f64>::zeros(p);
    let mut x = vec![1.0; p];
    for (row, &t) in rows.iter().zip(y) {
        x[1..].copy_from_slice(row);
        for i in 0..p {
            h[i] += x[i] * t;
            for j in i..p {
                g[(i, j)] += x[i] * x[j];
            }
        }
    }
    let nf = n as f64;
    for i in 0..p {
        h[i] /= nf;
        for j in i..p {
            g[(i, j)] /= nf;
            g[(j, i)] = g[(i, j)];
        }
    }
    for i in 1..p {
        g[(i, i)] += lambda;
    }
    let chol = g
        .clone()
        .cholesky()
        .ok_or(Error::SingularSystem { lambda })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-12 {
        return Err(Error::SingularSystem { lambda });
    }
    let beta = chol.solve(&h);
    let residual = (&g * &beta - &h).amax();
    if !beta.iter().all(|b| b.is_finite()) {
        return Err(Error::SingularSystem { lambda });
    }
    if !(residual < RIDGE_RESIDUAL_TOL) {
        return Err(Error::Training(format!(
            "ridge residual {residual:e} exceeds {RIDGE_RESIDUAL_TOL:e}"
        )));
    }
    Ok(RidgeFit {
        intercept: beta[0],
        weights: beta.iter().skip(1).copied().collect(),
        residual,
    })
}

/// Threshold `t` such that the number of scores strictly above `t` is as close
/// as possible to `round(rate * n)`. Ties in the scores can make an exact
/// count impossible; the nearer block boundary wins, the smaller on a draw.
pub fn selection_threshold(scores: &[f64], rate: f64) -> Result<f64> {
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid_input("threshold needs a non-empty set of finite scores"));
    }
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let n = s.len();
    let k = ((rate.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let below = |v: f64| v - v.abs().max(1.0);
    if k == 0 {
        return Ok(s[0]);
    }
    // The tie block holding position k - 1 is s[a..b].
    let v = s[k - 1];
    let a = s.partition_point(|x| *x > v);
    let b = s.partition_point(|x| *x >= v);
    if b - k < k - a {
        Ok(if b == n { below(v) } else { s[b] })
    } else {
        Ok(v)
    }
}

fn feature_rows(
    windows: &[LabeledWindow],
    patterns: &[SignPattern],
    mode: FeatureMode,
    exec: Exec,
) -> Vec<Vec<f64>> {
    exec.map_slice(windows, |w| pattern_features(&w.prices, patterns, mode))
}

fn pattern_features(prices: &[f64], patterns: &[SignPattern], mode: FeatureMode) -> Vec<f64> {
    let ups = up_flags(prices);
    patterns
        .iter()
        .map(|&p| {
            let c = count_occurrences(&ups, p);
            match mode {
                FeatureMode::Counts => f64::from(c),
                FeatureMode::Presence => f64::from(u8::from(c > 0)),
            }
        })
        .collect()
}

pub fn train(dataset: &Dataset, config: &SmCsfConfig) -> Result<TrainedSmCsf> {
    train_with(dataset, config, Exec::default())
}

pub fn train_with(dataset: &Dataset, config: &SmCsfConfig, exec: Exec) -> Result<TrainedSmCsf> {
    config.validate()?;
    dataset.validate()?;
    if dataset.len() < MIN_TRAIN_WINDOWS {
        return Err(Error::Training(format!(
            "{} windows; at least {MIN_TRAIN_WINDOWS} are needed",
            dataset.len()
        )));
    }
    if !dataset.has_both_classes() {
        return Err(Error::Training("dataset holds a single class".into()));
    }
    let vocab = enumerate_vocabulary(&config.window_sizes)?;
    let window = dataset.window_size();
    if window < vocab.max_pattern_len() + 1 {
        return Err(invalid_input(format!(
            "windows of {window} prices are too short for window sizes {:?}",
            config.window_sizes
        )));
    }

    let (fit_idx, val_idx) = shuffled_split(dataset.len(), config.validation_fraction, config.split_seed);
    let fit = dataset.subset(&fit_idx);
    let val = dataset.subset(&val_idx);

    let table = occurrence_table_with(&fit.windows, &vocab, exec)?;
    if table.single_class() {
        return Err(Error::Training("training split holds a single class".into()));
    }
    let eff = effectiveness_scores(&table, &vocab, config.alpha, config.tau)?;
    // Fewer than `fallback_top_k` passing patterns leave a score with a
    // handful of tied values; top up to the `fallback_top_k` strongest.
    let mut chosen = eff.effective_indices();
    let fallback_used = chosen.len() < config.fallback_top_k;
    if fallback_used {
        log::info!(
            "{} patterns reach |log-odds| >= {}; keeping the top {}",
            chosen.len(),
            config.tau,
            config.fallback_top_k
        );
        chosen = eff.top_k(config.fallback_top_k);
    }
    let patterns: Vec<SignPattern> = chosen.iter().map(|&i| vocab.patterns()[i]).collect();

    let rows = feature_rows(&fit.windows, &patterns, config.features, exec);
    let y: Vec<f64> = fit
        .windows
        .iter()
        .map(|w| match config.target {
            Target::Label => f64::from(w.label.as_u8()),
            Target::Return => w.ret,
        })
        .collect();
    let ridge = fit_ridge(&rows, &y, config.ridge_lambda).map_err(|e| match e {
        Error::SingularSystem { .. } if config.ridge_lambda == 0.0 => Error::Training(
            "normal equations are singular at ridge_lambda = 0; raise ridge_lambda".into(),
        ),
        e => e,
    })?;

    let mut model = TrainedSmCsf {
        schema: SMCSF_SCHEMA.into(),
        window,
        effective_patterns: patterns,
        weights: ridge.weights,
        intercept: ridge.intercept,
        score_threshold: 0.0,
        features: config.features,
        fallback_used,
        validation_selected_fraction: 0.0,
        ridge_residual: ridge.residual,
        provenance: TrainProvenance {
            config: config.clone(),
            dataset_fingerprint: dataset.fingerprint(),
            n_fit: fit.len(),
            n_validation: val.len(),
        },
    };
    let val_scores = model.score_all(&val, exec)?;
    model.score_threshold = selection_threshold(&val_scores, config.selection_rate)?;
    let above = val_scores.iter().filter(|s| **s > model.score_threshold).count();
    model.validation_selected_fraction = above as f64 / val_scores.len() as f64;
    Ok(model)
}

impl TrainedSmCsf {
    fn check_window(&self, prices: &[f64]) -> Result<()> {
        if prices.len() != self.window {
            return Err(invalid_input(format!(
                "window of {} prices; the model was trained on {}",
                prices.len(),
                self.window
            )));
        }
        Ok(())
    }

    pub fn score(&self, prices: &[f64]) -> Result<f64> {
        self.check_window(prices)?;
        let x = pattern_features(prices, &self.effective_patterns, self.features);
        Ok(self.intercept + self.weights.iter().zip(&x).map(|(w, c)| w * c).sum::<f64>())
    }

    pub fn predict(&self, prices: &[f64]) -> Result<bool> {
        Ok(self.score(prices)? > self.score_threshold)
    }

    pub fn score_all(&self, dataset: &Dataset, exec: Exec) -> Result<Vec<f64>> {
        exec.map_slice(&dataset.windows, |w| self.score(&w.prices))
            .into_iter()
            .collect()
    }

    /// Selection by the trained threshold.
    pub fn predict_all(&self, dataset: &Dataset, exec: Exec) -> Result<PredictionSet> {
        let scores = self.score_all(dataset, exec)?;
        Ok(PredictionSet {
            model: MODEL_NAME.into(),
            predictions: dataset
                .windows
                .iter()
                .zip(scores)
                .map(|(w, score)| crate::bench::Prediction {
                    id: w.id.clone(),
                    score,
                    selected: score > self.score_threshold,
                })
                .collect(),
        })
    }

    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.fallback_used {
            flags.push(FALLBACK_FLAG.into());
        }
        if !self.selection_rate_met() {
            flags.push(RATE_FLAG.into());
        }
        flags
    }

    /// Validation selection within `1/√n_val` of the configured rate. Few
    /// patterns mean heavily tied scores, which a strict threshold cannot split.
    pub fn selection_rate_met(&self) -> bool {
        let n = self.provenance.n_validation.max(1) as f64;
        (self.validation_selected_fraction - self.provenance.config.selection_rate).abs() <= 1.0 / n.sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.schema != SMCSF_SCHEMA {
            return Err(Error::UnsupportedSchema {
                found: model.schema,
                expected: SMCSF_SCHEMA.into(),
            });
        }
        if model.effective_patterns.is_empty()
            || model.weights.len() != model.effective_patterns.len()
            || !model.score_threshold.is_finite()
        {
            return Err(invalid_input("malformed sm-csf model"));
        }
        Ok(model)
    }

    /// SHA-256 of the serialised model.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }
}
