//! Baseline classifiers on per-window returns: Gaussian naive Bayes, a linear
//! SVM trained by hinge-loss SGD, and a ReLU MLP. Every model, the pattern
//! regression included, maps a window to a real score; selection takes the
//! top fraction of scores.

pub mod features;
pub mod mlp;
pub mod nb;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::PredictionSet;
use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::exec::Exec;
use crate::smcsf::{self, SmCsfConfig, TrainedSmCsf};

pub use features::{window_features, FeatureMatrix, Scaling};
pub use mlp::{gradient_check, train_mlp, MlpConfig, MlpModel};
pub use nb::{train_naive_bayes, NaiveBayes};
pub use svm::{train_linear_svm, LinearModel, SvmConfig};

fn check_dims(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(invalid_input(format!("{got} features; the model expects {want}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "sm-csf")]
    SmCsf,
    #[serde(rename = "nb")]
    NaiveBayes,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "mlp")]
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::SmCsf, ModelKind::NaiveBayes, ModelKind::Svm, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SmCsf => "sm-csf",
            ModelKind::NaiveBayes => "nb",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid_input(format!("unknown model {s:?} (sm-csf, nb, svm, mlp)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    /// Input representation of the return-based learners.
    pub scaling: Scaling,
    pub nb_var_floor: f64,
    pub smcsf: SmCsfConfig,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            scaling: Scaling::default(),
            nb_var_floor: nb::DEFAULT_VAR_FLOOR,
            smcsf: SmCsfConfig::default(),
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnedModel {
    SmCsf(TrainedSmCsf),
    NaiveBayes(NaiveBayes),
    Svm(LinearModel),
    Mlp(MlpModel),
}

impl LearnedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            LearnedModel::SmCsf(_) => ModelKind::SmCsf,
            LearnedModel::NaiveBayes(_) => ModelKind::NaiveBayes,
            LearnedModel::Svm(_) => ModelKind::Svm,
            LearnedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn score_window(&self, prices: &[f64]) -> Result<f64> {
        match self {
            LearnedModel::SmCsf(m) => m.score(prices),
            LearnedModel::NaiveBayes(m) => m.score_window(prices),
            LearnedModel::Svm(m) => m.score_window(prices),
            LearnedModel::Mlp(m) => m.score_window(prices),
        }
    }

    pub fn score_dataset(&self, dataset: &Dataset, exec: Exec) -> Result<Vec<f64>> {
        exec.map_slice(&dataset.windows, |w| self.score_window(&w.prices))
            .into_iter()
            .collect()
    }

    /// Selects the top `rate` fraction of `dataset` by score.
    pub fn predict_top(&self, dataset: &Dataset, rate: f64, exec: Exec) -> Result<PredictionSet> {
        let scores = self.score_dataset(dataset, exec)?;
        let ids: Vec<String> = dataset.windows.iter().map(|w| w.id.clone()).collect();
        Ok(PredictionSet::from_scores(self.kind().as_str(), &ids, &scores, rate))
    }

    pub fn flags(&self) -> Vec<String> {
        match self {
            LearnedModel::SmCsf(m) => m.flags(),
            _ => Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            LearnedModel::SmCsf(m) => serde_json::to_string_pretty(m)?,
            LearnedModel::NaiveBayes(m) => serde_json::to_string_pretty(m)?,
            LearnedModel::Svm(m) => serde_json::to_string_pretty(m)?,
            LearnedModel::Mlp(m) => serde_json::to_string_pretty(m)?,
        })
    }

    /// Parses any model file, dispatching on its `schema` tag.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let schema = v.get("schema").and_then(|s| s.as_str()).unwrap_or("").to_string();
        match schema.as_str() {
            smcsf::SMCSF_SCHEMA => Ok(LearnedModel::SmCsf(TrainedSmCsf::from_json(s)?)),
            nb::NB_SCHEMA => Ok(LearnedModel::NaiveBayes(serde_json::from_value(v)?)),
            svm::SVM_SCHEMA => Ok(LearnedModel::Svm(serde_json::from_value(v)?)),
            mlp::MLP_SCHEMA => Ok(LearnedModel::Mlp(serde_json::from_value(v)?)),
            _ => Err(Error::UnsupportedSchema {
                found: schema,
                expected: "smcsf-v1 | nb-v1 | svm-v1 | mlp-v1".into(),
            }),
        }
    }
}

pub fn train_model(kind: ModelKind, dataset: &Dataset, cfg: &LearnerConfig, exec: Exec) -> Result<LearnedModel> {
    if kind == ModelKind::SmCsf {
        return Ok(LearnedModel::SmCsf(smcsf::train_with(dataset, &cfg.smcsf, exec)?));
    }
    let x = FeatureMatrix::from_dataset(dataset, cfg.scaling, exec)?;
    Ok(match kind {
        ModelKind::NaiveBayes => LearnedModel::NaiveBayes(train_naive_bayes(&x, cfg.scaling, cfg.nb_var_floor)?),
        ModelKind::Svm => LearnedModel::Svm(train_linear_svm(&x, cfg.scaling, &cfg.svm)?),
        ModelKind::Mlp => LearnedModel::Mlp(train_mlp(&x, cfg.scaling, &cfg.mlp)?),
        ModelKind::SmCsf => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_random, GenConfig};

    #[test]
    fn every_model_round_trips_through_json() {
        let ds = generate_random(&GenConfig::new(600, 1)).unwrap();
        let cfg = LearnerConfig {
            mlp: MlpConfig { epochs: 2, ..MlpConfig::default() },
            svm: SvmConfig { epochs: 2, ..SvmConfig::default() },
            ..LearnerConfig::default()
        };
        for kind in ModelKind::ALL {
            let m = train_model(kind, &ds, &cfg, Exec::default()).unwrap();
            assert_eq!(m.kind(), kind);
            let back = LearnedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            let s = m.score_dataset(&ds, Exec::Sequential).unwrap();
            assert_eq!(s, back.score_dataset(&ds, Exec::Parallel).unwrap());
        }
        assert!(matches!(
            LearnedModel::from_json(r#"{"schema":"cnn-v1"}"#),
            Err(Error::UnsupportedSchema { .. })
        ));
    }

    #[test]
    fn kind_names_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("cnn".parse::<ModelKind>().is_err());
    }
}
