//! Selected-sample precision: among the windows a model selects, the share
//! whose next return was positive. Compared against a random selection of
//! the same size and, where a generating rule exists, the oracle.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{invalid_input, Result};
use crate::exec::Exec;
use crate::rng;
use crate::series::Family;

pub const RANDOM_BASELINE: &str = "random-baseline";
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub model: String,
    pub predictions: Vec<Prediction>,
}

impl PredictionSet {
    /// Marks the `round(rate * n)` highest-scoring entries as selected.
    pub fn from_scores(model: impl Into<String>, ids: &[String], scores: &[f64], rate: f64) -> Self {
        let selected = select_top_fraction(scores, rate);
        Self {
            model: model.into(),
            predictions: ids
                .iter()
                .zip(scores)
                .zip(selected)
                .map(|((id, &score), selected)| Prediction {
                    id: id.clone(),
                    score,
                    selected,
                })
                .collect(),
        }
    }

    pub fn n_selected(&self) -> usize {
        self.predictions.iter().filter(|p| p.selected).count()
    }
}

/// Top `round(rate * n)` scores; ties resolved towards the earlier index.
/// NaN scores rank last.
pub fn select_top_fraction(scores: &[f64], rate: f64) -> Vec<bool> {
    let n = scores.len();
    let k = ((rate.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| if scores[i].is_nan() { f64::NEG_INFINITY } else { scores[i] };
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut selected = vec![false; n];
    for &i in &order[..k] {
        selected[i] = true;
    }
    selected
}

/// Wilson score interval for a proportion `p_hat` observed over `n` trials.
pub fn wilson_interval(p_hat: f64, n: f64, z: f64) -> (f64, f64) {
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelReport {
    pub model: String,
    pub family: Family,
    pub n_test: usize,
    pub n_selected: usize,
    /// `None` when nothing was selected.
    pub precision_pos: Option<f64>,
    pub base_rate: f64,
    pub selection_rate: f64,
    pub wilson_ci_95: Option<(f64, f64)>,
    pub oracle_precision: Option<f64>,
    /// Random-baseline rows: number of trials and spread of their precision.
    pub trials: Option<usize>,
    pub precision_std: Option<f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl ModelReport {
    /// Standard error of the precision estimate.
    pub fn standard_error(&self) -> Option<f64> {
        let p = self.precision_pos?;
        (self.n_selected > 0).then(|| (p * (1.0 - p) / self.n_selected as f64).sqrt())
    }

    /// Whether the base rate lies inside this row's Wilson interval.
    pub fn base_rate_in_ci(&self) -> Option<bool> {
        self.wilson_ci_95
            .map(|(lo, hi)| (lo..=hi).contains(&self.base_rate))
    }
}

fn label_index(dataset: &Dataset) -> Result<HashMap<&str, Label>> {
    if dataset.is_empty() {
        return Err(invalid_input("empty dataset"));
    }
    Ok(dataset
        .windows
        .iter()
        .map(|w| (w.id.as_str(), w.label))
        .collect())
}

/// Scores a prediction set against the labels in `dataset`. The base rate is
/// taken over the predicted windows.
pub fn precision_of_selected(preds: &PredictionSet, dataset: &Dataset) -> Result<ModelReport> {
    let labels = label_index(dataset)?;
    let mut seen = HashSet::with_capacity(preds.predictions.len());
    let (mut n_pos, mut n_sel, mut sel_pos) = (0usize, 0usize, 0usize);
    for p in &preds.predictions {
        let label = *labels.get(p.id.as_str()).ok_or_else(|| {
            invalid_input(format!("prediction for unknown window {:?} ({})", p.id, preds.model))
        })?;
        if !seen.insert(p.id.as_str()) {
            return Err(invalid_input(format!("duplicate prediction for {:?}", p.id)));
        }
        n_pos += usize::from(label.is_positive());
        if p.selected {
            n_sel += 1;
            sel_pos += usize::from(label.is_positive());
        }
    }
    let n_test = preds.predictions.len();
    if n_test == 0 {
        return Err(invalid_input(format!("prediction set {} is empty", preds.model)));
    }
    let precision = (n_sel > 0).then(|| sel_pos as f64 / n_sel as f64);
    let mut flags = Vec::new();
    if n_sel == 0 {
        flags.push("no-selection".to_string());
    }
    Ok(ModelReport {
        model: preds.model.clone(),
        family: dataset.family,
        n_test,
        n_selected: n_sel,
        precision_pos: precision,
        base_rate: n_pos as f64 / n_test as f64,
        selection_rate: n_sel as f64 / n_test as f64,
        wilson_ci_95: precision.map(|p| wilson_interval(p, n_sel as f64, Z_95)),
        oracle_precision: None,
        trials: None,
        precision_std: None,
        flags,
    })
}

/// Mean precision of `trials` uniformly random selections of
/// `round(selection_rate * n)` windows.
pub fn random_baseline(dataset: &Dataset, selection_rate: f64, seed: u64, trials: usize) -> Result<ModelReport> {
    random_baseline_with(dataset, selection_rate, seed, trials, Exec::default())
}

pub fn random_baseline_with(
    dataset: &Dataset,
    selection_rate: f64,
    seed: u64,
    trials: usize,
    exec: Exec,
) -> Result<ModelReport> {
    if dataset.is_empty() {
        return Err(invalid_input("empty dataset"));
    }
    if trials == 0 {
        return Err(invalid_input("random baseline needs at least one trial"));
    }
    if !(selection_rate > 0.0 && selection_rate <= 1.0) {
        return Err(invalid_input(format!("selection rate {selection_rate} outside (0, 1]")));
    }
    let n = dataset.len();
    let k = ((selection_rate * n as f64).round() as usize).clamp(1, n);
    let positive: Vec<bool> = dataset.windows.iter().map(|w| w.label.is_positive()).collect();
    let hits = exec.map_indexed(trials, |t| {
        let mut r = rng::stream(seed, rng::BASELINE, t as u64);
        index::sample(&mut r, n, k)
            .into_iter()
            .filter(|&i| positive[i])
            .count()
    });
    let mean = hits.iter().sum::<usize>() as f64 / (trials * k) as f64;
    let var = hits
        .iter()
        .map(|&h| (h as f64 / k as f64 - mean).powi(2))
        .sum::<f64>()
        / trials as f64;
    let base_rate = dataset.base_rate();
    Ok(ModelReport {
        model: RANDOM_BASELINE.into(),
        family: dataset.family,
        n_test: n,
        n_selected: k,
        precision_pos: Some(mean),
        base_rate,
        selection_rate: k as f64 / n as f64,
        wilson_ci_95: Some(wilson_interval(mean, k as f64, Z_95)),
        oracle_precision: None,
        trials: Some(trials),
        precision_std: Some(var.sqrt()),
        flags: Vec::new(),
    })
}

/// Orders rows by precision (highest first, undefined last), then by name.
pub fn sort_reports(rows: &mut [ModelReport]) {
    rows.sort_by(|a, b| {
        let pa = a.precision_pos.unwrap_or(f64::NEG_INFINITY);
        let pb = b.precision_pos.unwrap_or(f64::NEG_INFINITY);
        pb.total_cmp(&pa).then_with(|| a.model.cmp(&b.model))
    });
}

/// `a - b` in units of their combined standard error.
pub fn excess_in_combined_se(a: &ModelReport, b: &ModelReport) -> Option<f64> {
    let (pa, pb) = (a.precision_pos?, b.precision_pos?);
    let se = (a.standard_error()?.powi(2) + b.standard_error()?.powi(2)).sqrt();
    Some(if se > 0.0 { (pa - pb) / se } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{LabeledWindow, Provenance};

    fn dataset(labels: &[bool]) -> Dataset {
        Dataset {
            family: Family::Random,
            provenance: Provenance {
                config_hash: String::new(),
                seed: 0,
                generator: "test".into(),
                window: 2,
                overlapping: false,
            },
            windows: labels
                .iter()
                .enumerate()
                .map(|(i, &pos)| LabeledWindow::new(format!("w{i}"), vec![1.0, 2.0], if pos { 0.1 } else { -0.1 }))
                .collect(),
        }
    }

    fn preds(ds: &Dataset, selected: &[usize]) -> PredictionSet {
        PredictionSet {
            model: "m".into(),
            predictions: ds
                .windows
                .iter()
                .enumerate()
                .map(|(i, w)| Prediction {
                    id: w.id.clone(),
                    score: 0.0,
                    selected: selected.contains(&i),
                })
                .collect(),
        }
    }

    /// Wilson bounds as the roots of (p_hat - p)^2 = z^2 p (1 - p) / n.
    fn wilson_by_roots(p_hat: f64, n: f64, z: f64) -> (f64, f64) {
        let a = 1.0 + z * z / n;
        let b = -(2.0 * p_hat + z * z / n);
        let c = p_hat * p_hat;
        let disc = (b * b - 4.0 * a * c).sqrt();
        ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
    }

    #[test]
    fn hand_built_precision_and_wilson() {
        let ds = dataset(&[true, true, true, false, false, true, false, false, false, true]);
        let r = precision_of_selected(&preds(&ds, &[0, 1, 2, 3]), &ds).unwrap();
        assert_eq!(r.n_selected, 4);
        assert_eq!(r.precision_pos, Some(0.75));
        let (lo, hi) = r.wilson_ci_95.unwrap();
        let (elo, ehi) = wilson_by_roots(0.75, 4.0, Z_95);
        assert!((lo - elo).abs() < 1e-12 && (hi - ehi).abs() < 1e-12);
        assert!((lo - 0.30).abs() < 0.01 && (hi - 0.95).abs() < 0.01, "{lo} {hi}");
        assert_eq!(r.base_rate, 0.5);
    }

    #[test]
    fn select_all_equals_base_rate() {
        let ds = dataset(&[true, false, true, true, false]);
        let r = precision_of_selected(&preds(&ds, &[0, 1, 2, 3, 4]), &ds).unwrap();
        assert_eq!(r.precision_pos, Some(r.base_rate));
        assert_eq!(r.base_rate, ds.base_rate());
    }

    #[test]
    fn empty_selection_is_flagged() {
        let ds = dataset(&[true, false]);
        let r = precision_of_selected(&preds(&ds, &[]), &ds).unwrap();
        assert_eq!(r.precision_pos, None);
        assert_eq!(r.wilson_ci_95, None);
        assert_eq!(r.flags, vec!["no-selection".to_string()]);
    }

    #[test]
    fn unknown_or_duplicate_ids_rejected() {
        let ds = dataset(&[true, false]);
        let mut p = preds(&ds, &[0]);
        p.predictions[1].id = "nope".into();
        assert!(precision_of_selected(&p, &ds).is_err());
        let mut p = preds(&ds, &[0]);
        p.predictions[1].id = "w0".into();
        assert!(precision_of_selected(&p, &ds).is_err());
    }

    #[test]
    fn top_fraction_selection() {
        let s = select_top_fraction(&[0.1, 0.9, 0.5, 0.9, f64::NAN], 0.4);
        assert_eq!(s, vec![false, true, false, true, false]);
        assert!(select_top_fraction(&[1.0; 10], 1.0).iter().all(|&x| x));
        assert!(!select_top_fraction(&[1.0; 10], 0.0).iter().any(|&x| x));
    }

    #[test]
    fn random_baseline_examples() {
        let labels: Vec<bool> = (0..10_000).map(|i| i % 25 < 13).collect();
        let ds = dataset(&labels);
        assert_eq!(ds.base_rate(), 0.52);
        let r = random_baseline(&ds, 0.2, 3, 1000).unwrap();
        let mean = r.precision_pos.unwrap();
        assert!((0.51..=0.53).contains(&mean), "{mean}");
        assert!((mean - 0.52).abs() < 0.01);

        let all = random_baseline(&ds, 1.0, 3, 20).unwrap();
        assert_eq!(all.precision_pos, Some(ds.base_rate()));
        assert_eq!(all.precision_std, Some(0.0));

        assert!(random_baseline(&dataset(&[]), 0.2, 1, 10).is_err());
        assert!(random_baseline(&ds, 0.2, 1, 0).is_err());
        let seq = random_baseline_with(&ds, 0.2, 3, 50, Exec::Sequential).unwrap();
        let par = random_baseline_with(&ds, 0.2, 3, 50, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn report_ordering() {
        let ds = dataset(&[true, false, true, false]);
        let mut rows = vec![
            precision_of_selected(&preds(&ds, &[1]), &ds).unwrap(),
            precision_of_selected(&preds(&ds, &[0]), &ds).unwrap(),
            precision_of_selected(&preds(&ds, &[]), &ds).unwrap(),
        ];
        rows[0].model = "b".into();
        rows[1].model = "a".into();
        rows[2].model = "c".into();
        sort_reports(&mut rows);
        let names: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, vec!["a", "b", "c"]);
    }
}
