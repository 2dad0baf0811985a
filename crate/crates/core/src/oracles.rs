//! Ground-truth predictors that apply a known generating rule directly.
//!
//! On their own family they select exactly the signal windows, so their
//! precision is the best any model can reach there.

use crate::bench::{Prediction, PredictionSet};
use crate::dataset::{Dataset, LabeledWindow};
use crate::error::Result;
use crate::exec::Exec;
use crate::generators::{CsfRule, NcsfRule};

pub const GT_CSF: &str = "gt-csf";
pub const GT_NCSF: &str = "gt-ncsf";

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePrediction {
    pub window_id: String,
    pub selected: bool,
    /// Rule score for CSF, up-step ratio for NCSF.
    pub score: f64,
}

pub fn gt_csf_predict(window: &LabeledWindow, rule: &CsfRule) -> Result<OraclePrediction> {
    let theta = rule.calibrated_threshold()?;
    let score = rule.score(&window.prices)?;
    Ok(OraclePrediction {
        window_id: window.id.clone(),
        selected: score > theta,
        score,
    })
}

pub fn gt_ncsf_predict(window: &LabeledWindow, rule: &NcsfRule) -> Result<OraclePrediction> {
    let score = rule.up_ratio(&window.prices)?;
    Ok(OraclePrediction {
        window_id: window.id.clone(),
        selected: score >= rule.ratio,
        score,
    })
}

fn collect(model: &str, preds: Vec<Result<OraclePrediction>>) -> Result<PredictionSet> {
    let predictions = preds
        .into_iter()
        .map(|p| {
            p.map(|p| Prediction {
                id: p.window_id,
                score: p.score,
                selected: p.selected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet {
        model: model.to_string(),
        predictions,
    })
}

pub fn gt_csf_predict_all(dataset: &Dataset, rule: &CsfRule, exec: Exec) -> Result<PredictionSet> {
    collect(GT_CSF, exec.map_slice(&dataset.windows, |w| gt_csf_predict(w, rule)))
}

pub fn gt_ncsf_predict_all(dataset: &Dataset, rule: &NcsfRule, exec: Exec) -> Result<PredictionSet> {
    collect(GT_NCSF, exec.map_slice(&dataset.windows, |w| gt_ncsf_predict(w, rule)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::generators::{
        calibrate_threshold, generate_csf, generate_ncsf, sample_csf_rule, GenConfig,
    };
    use crate::patterns::{enumerate_vocabulary, SignPattern};

    fn monotone_window() -> LabeledWindow {
        LabeledWindow::new("up", (1..=20).map(f64::from).collect(), 0.01)
    }

    fn precision(preds: &PredictionSet, ds: &Dataset) -> f64 {
        let (mut sel, mut pos) = (0usize, 0usize);
        for (p, w) in preds.predictions.iter().zip(&ds.windows) {
            assert_eq!(p.id, w.id);
            if p.selected {
                sel += 1;
                pos += usize::from(w.label.is_positive());
            }
        }
        pos as f64 / sel as f64
    }

    #[test]
    fn csf_oracle_examples() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let mut zero = CsfRule::new(v.clone(), vec![0.0; v.len()], 20).unwrap();
        assert!(matches!(
            gt_csf_predict(&monotone_window(), &zero),
            Err(Error::InvalidRule(_))
        ));
        calibrate_threshold(&mut zero, 0.8, 500, 1).unwrap();
        let p = gt_csf_predict(&monotone_window(), &zero).unwrap();
        assert_eq!((p.score, p.selected), (0.0, false));

        let mut weights = vec![0.0; v.len()];
        weights[v.index_of(SignPattern::new(3, 0b111).unwrap()).unwrap()] = 1.0;
        let mut rule = CsfRule::new(v, weights, 20).unwrap();
        rule.threshold = Some(10.0);
        let p = gt_csf_predict(&monotone_window(), &rule).unwrap();
        assert_eq!((p.score, p.selected), (17.0, true));
    }

    #[test]
    fn ncsf_oracle_examples() {
        let rule = NcsfRule::default();
        let p = gt_ncsf_predict(&monotone_window(), &rule).unwrap();
        assert_eq!((p.score, p.selected), (1.0, true));
        let alt: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 2.0 } else { 1.0 }).collect();
        let p = gt_ncsf_predict(&LabeledWindow::new("alt", alt, -0.1), &rule).unwrap();
        assert_eq!(p.score, 9.0 / 19.0);
        assert!(!p.selected);
        let short = LabeledWindow::new("s", vec![1.0, 2.0], 0.1);
        assert!(gt_ncsf_predict(&short, &rule).is_err());
    }

    #[test]
    fn csf_oracle_precision_on_own_family() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let mut rule = sample_csf_rule(&v, 10, 21).unwrap();
        calibrate_threshold(&mut rule, 0.8, 10_000, 21).unwrap();
        let ds = generate_csf(&rule, &GenConfig::new(20_000, 22)).unwrap();
        let preds = gt_csf_predict_all(&ds, &rule, Exec::default()).unwrap();
        let prec = precision(&preds, &ds);
        assert!((0.73..=0.77).contains(&prec), "{prec}");
    }

    #[test]
    fn ncsf_oracle_precision_on_own_family() {
        let rule = NcsfRule::default();
        let ds = generate_ncsf(&rule, &GenConfig::new(50_000, 23)).unwrap();
        let preds = gt_ncsf_predict_all(&ds, &rule, Exec::default()).unwrap();
        let prec = precision(&preds, &ds);
        assert!((0.72..=0.78).contains(&prec), "{prec}");
    }
}
