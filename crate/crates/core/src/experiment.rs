//! End-to-end runs: generate or ingest each family, split, train every
//! model, score the test split, and collect one report row per model.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{precision_of_selected, random_baseline_with, sort_reports, ModelReport, PredictionSet};
use crate::dataset::{shuffled_split, Dataset};
use crate::error::{invalid_config, Error, Result};
use crate::exec::Exec;
use crate::generators::{
    calibrate_threshold_with, generate_csf_with, generate_ncsf_with, generate_random_with, sample_csf_rule,
    CsfRule, GenConfig, Layout, NcsfRule, StepModel, DEFAULT_BASE_RATE, DEFAULT_CALIBRATION_N, DEFAULT_P_SIGNAL,
    DEFAULT_QUANTILE, DEFAULT_RATIO, DEFAULT_WINDOW, GENERATOR_VERSION,
};
use crate::io::{ingest_csv, real_to_dataset, CsvSpec, SplitFile};
use crate::learners::{train_model, LearnedModel, LearnerConfig, ModelKind};
use crate::oracles::{gt_csf_predict_all, gt_ncsf_predict_all};
use crate::patterns::enumerate_vocabulary;
use crate::rng;
use crate::series::Family;

pub const RUN_SCHEMA: &str = "csfbench-run-v1";
pub const REPORT_SCHEMA: &str = "report-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsfSettings {
    pub window_sizes: Vec<usize>,
    pub k_effective: usize,
    pub p_signal: f64,
    pub quantile: f64,
    pub calibration_n: usize,
}

impl Default for CsfSettings {
    fn default() -> Self {
        Self {
            window_sizes: vec![4, 5, 6, 7],
            k_effective: 10,
            p_signal: DEFAULT_P_SIGNAL,
            quantile: DEFAULT_QUANTILE,
            calibration_n: DEFAULT_CALIBRATION_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NcsfSettings {
    pub ratio: f64,
    pub p_signal: f64,
}

impl Default for NcsfSettings {
    fn default() -> Self {
        Self {
            ratio: DEFAULT_RATIO,
            p_signal: DEFAULT_P_SIGNAL,
        }
    }
}

/// Parameters of a full run; the JSON form is the `--config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema: String,
    pub seed: u64,
    pub families: Vec<Family>,
    pub n_windows: usize,
    pub window: usize,
    pub step: StepModel,
    pub start_price: f64,
    pub base_rate: f64,
    pub layout: Layout,
    pub csf: CsfSettings,
    pub ncsf: NcsfSettings,
    /// Source of the real family; required when `families` lists it.
    pub real_csv: Option<CsvSpec>,
    pub models: Vec<ModelKind>,
    pub learners: LearnerConfig,
    pub test_fraction: f64,
    pub selection_rate: f64,
    pub baseline_trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: RUN_SCHEMA.into(),
            seed: 0,
            families: vec![Family::Csf, Family::Ncsf, Family::Random],
            n_windows: 20_000,
            window: DEFAULT_WINDOW,
            step: StepModel::default(),
            start_price: 100.0,
            base_rate: DEFAULT_BASE_RATE,
            layout: Layout::Independent,
            csf: CsfSettings::default(),
            ncsf: NcsfSettings::default(),
            real_csv: None,
            models: ModelKind::ALL.to_vec(),
            learners: LearnerConfig::default(),
            test_fraction: 0.3,
            selection_rate: 0.2,
            baseline_trials: 1000,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != RUN_SCHEMA {
            return Err(Error::UnsupportedSchema {
                found: self.schema.clone(),
                expected: RUN_SCHEMA.into(),
            });
        }
        if self.families.is_empty() {
            return Err(invalid_config("no families to run"));
        }
        if self.families.contains(&Family::Real) && self.real_csv.is_none() {
            return Err(invalid_config("family real needs real_csv"));
        }
        for (name, v) in [("test_fraction", self.test_fraction), ("selection_rate", self.selection_rate)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid_config(format!("{name} {v} must lie in (0, 1)")));
            }
        }
        if self.baseline_trials == 0 {
            return Err(invalid_config("baseline_trials must be >= 1"));
        }
        self.learners.smcsf.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }

    fn gen_config(&self, family: Family) -> GenConfig {
        GenConfig {
            n_windows: self.n_windows,
            seed: family_seed(self.seed, family),
            window: self.window,
            step: self.step,
            start_price: self.start_price,
            base_rate: self.base_rate,
            layout: self.layout,
        }
    }
}

/// Per-family child of the run seed.
pub fn family_seed(seed: u64, family: Family) -> u64 {
    rng::derive_seed(seed, 0x6661_6d00 + family as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySummary {
    pub family: Family,
    pub n_windows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub base_rate: f64,
    pub signal_fraction: Option<f64>,
    pub q_off: Option<f64>,
    pub overlapping: bool,
    pub dataset_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub selection_rate: f64,
    pub families: Vec<FamilySummary>,
    /// Grouped by family in run order, then by precision.
    pub rows: Vec<ModelReport>,
}

impl ExperimentReport {
    pub fn rows_for(&self, family: Family) -> impl Iterator<Item = &ModelReport> {
        self.rows.iter().filter(move |r| r.family == family)
    }

    pub fn row(&self, family: Family, model: &str) -> Option<&ModelReport> {
        self.rows_for(family).find(|r| r.model == model)
    }
}

/// Everything a run produced for one family.
#[derive(Debug, Clone)]
pub struct FamilyRun {
    pub family: Family,
    pub dataset: Dataset,
    pub split: SplitFile,
    pub csf_rule: Option<CsfRule>,
    pub ncsf_rule: Option<NcsfRule>,
    pub models: Vec<LearnedModel>,
    pub predictions: Vec<PredictionSet>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub families: Vec<FamilyRun>,
}

/// A family's dataset and, for synthetic families, its generating rule.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub csf_rule: Option<CsfRule>,
    pub ncsf_rule: Option<NcsfRule>,
    pub signal_fraction: Option<f64>,
    pub q_off: Option<f64>,
}

/// Generates (or ingests) one family as configured.
pub fn prepare(cfg: &RunConfig, family: Family, exec: Exec) -> Result<Prepared> {
    let gen = cfg.gen_config(family);
    Ok(match family {
        Family::Csf => {
            let vocab = enumerate_vocabulary(&cfg.csf.window_sizes)?;
            let mut rule = sample_csf_rule(&vocab, cfg.csf.k_effective, gen.seed)?
                .with_probabilities(cfg.csf.p_signal, cfg.base_rate)?;
            rule.window = cfg.window;
            calibrate_threshold_with(&mut rule, cfg.csf.quantile, cfg.csf.calibration_n, gen.seed, exec)?;
            let (dataset, s) = generate_csf_with(&rule, &gen, exec)?;
            Prepared {
                dataset,
                csf_rule: Some(rule),
                ncsf_rule: None,
                signal_fraction: Some(s.signal_fraction),
                q_off: Some(s.q_off),
            }
        }
        Family::Ncsf => {
            let rule = NcsfRule::new(cfg.window, cfg.ncsf.ratio, cfg.ncsf.p_signal, cfg.base_rate)?;
            let (dataset, s) = generate_ncsf_with(&rule, &gen, exec)?;
            Prepared {
                dataset,
                csf_rule: None,
                ncsf_rule: Some(rule),
                signal_fraction: Some(s.signal_fraction),
                q_off: Some(s.q_off),
            }
        }
        Family::Random => Prepared {
            dataset: generate_random_with(&gen, exec)?.0,
            csf_rule: None,
            ncsf_rule: None,
            signal_fraction: None,
            q_off: None,
        },
        Family::Real => {
            let spec = cfg.real_csv.as_ref().ok_or_else(|| invalid_config("family real needs real_csv"))?;
            let ing = ingest_csv(spec)?;
            Prepared {
                dataset: real_to_dataset(&ing.series, cfg.window)?,
                csf_rule: None,
                ncsf_rule: None,
                signal_fraction: None,
                q_off: None,
            }
        }
    })
}

/// The run's train/test split of `dataset`, seeded from the run seed.
pub fn default_split(cfg: &RunConfig, dataset: &Dataset) -> Result<SplitFile> {
    let split_seed = rng::derive_seed(family_seed(cfg.seed, dataset.family), rng::SPLIT);
    let (train_idx, test_idx) = shuffled_split(dataset.len(), cfg.test_fraction, split_seed);
    SplitFile::new(dataset, &train_idx, &test_idx, split_seed, cfg.test_fraction)
}

/// Trains and scores every configured model on an existing dataset.
pub fn evaluate_dataset(
    cfg: &RunConfig,
    dataset: &Dataset,
    csf_rule: Option<&CsfRule>,
    ncsf_rule: Option<&NcsfRule>,
    exec: Exec,
) -> Result<(SplitFile, Vec<LearnedModel>, Vec<PredictionSet>, Vec<ModelReport>)> {
    let family = dataset.family;
    let split = default_split(cfg, dataset)?;
    let (train_idx, test_idx) = split.indices(dataset)?;
    let train = dataset.subset(&train_idx);
    let test = dataset.subset(&test_idx);

    let mut models = Vec::new();
    let mut predictions = Vec::new();
    let mut rows = Vec::new();
    for &kind in &cfg.models {
        let ctx = |e: Error| e.context(format!("{family}/{kind}"));
        let model = train_model(kind, &train, &cfg.learners, exec).map_err(ctx)?;
        let preds = model.predict_top(&test, cfg.selection_rate, exec).map_err(ctx)?;
        let mut row = precision_of_selected(&preds, &test).map_err(ctx)?;
        row.flags.extend(model.flags());
        rows.push(row);
        models.push(model);
        predictions.push(preds);
    }

    let baseline_seed = rng::derive_seed(family_seed(cfg.seed, family), rng::BASELINE);
    rows.push(random_baseline_with(&test, cfg.selection_rate, baseline_seed, cfg.baseline_trials, exec)?);

    let oracle = match (csf_rule, ncsf_rule) {
        (Some(rule), _) => Some(gt_csf_predict_all(&test, rule, exec)?),
        (_, Some(rule)) => Some(gt_ncsf_predict_all(&test, rule, exec)?),
        _ => None,
    };
    if let Some(preds) = oracle {
        let row = precision_of_selected(&preds, &test)?;
        let bound = row.precision_pos;
        rows.push(row);
        predictions.push(preds);
        for r in &mut rows {
            r.oracle_precision = bound;
        }
    }
    sort_reports(&mut rows);
    Ok((split, models, predictions, rows))
}

pub fn run_experiment(cfg: &RunConfig, exec: Exec) -> Result<RunOutput> {
    cfg.validate()?;
    let mut families = Vec::new();
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for &family in &cfg.families {
        log::info!("family {family}: preparing data");
        let prep = prepare(cfg, family, exec).map_err(|e| e.context(family.to_string()))?;
        log::info!("family {family}: training {} models", cfg.models.len());
        let (split, models, predictions, mut fam_rows) =
            evaluate_dataset(cfg, &prep.dataset, prep.csf_rule.as_ref(), prep.ncsf_rule.as_ref(), exec)?;
        if prep.dataset.provenance.overlapping {
            for r in &mut fam_rows {
                r.flags.push("overlapping-windows".into());
            }
        }
        summaries.push(FamilySummary {
            family,
            n_windows: prep.dataset.len(),
            n_train: split.train.len(),
            n_test: split.test.len(),
            base_rate: prep.dataset.base_rate(),
            signal_fraction: prep.signal_fraction,
            q_off: prep.q_off,
            overlapping: prep.dataset.provenance.overlapping,
            dataset_fingerprint: prep.dataset.fingerprint(),
        });
        rows.extend(fam_rows);
        families.push(FamilyRun {
            family,
            dataset: prep.dataset,
            split,
            csf_rule: prep.csf_rule,
            ncsf_rule: prep.ncsf_rule,
            models,
            predictions,
        });
    }
    Ok(RunOutput {
        report: ExperimentReport {
            schema: REPORT_SCHEMA.into(),
            config_hash: cfg.hash()?,
            seed: cfg.seed,
            generator: GENERATOR_VERSION.into(),
            selection_rate: cfg.selection_rate,
            families: summaries,
            rows,
        },
        families,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One row per model and family.
pub fn write_report_csv<W: Write>(out: W, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "family",
        "model",
        "n_test",
        "n_selected",
        "selection_rate",
        "precision_pos",
        "base_rate",
        "ci_lo",
        "ci_hi",
        "oracle_precision",
        "trials",
        "precision_std",
        "flags",
    ])?;
    for r in &report.rows {
        let (lo, hi) = r.wilson_ci_95.unzip();
        w.write_record([
            r.family.to_string(),
            r.model.clone(),
            r.n_test.to_string(),
            r.n_selected.to_string(),
            r.selection_rate.to_string(),
            opt(r.precision_pos),
            r.base_rate.to_string(),
            opt(lo),
            opt(hi),
            opt(r.oracle_precision),
            r.trials.map_or_else(String::new, |t| t.to_string()),
            opt(r.precision_std),
            r.flags.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))
}

/// Bar-chart input: precision with its interval and the base rate.
pub fn write_plot_csv<W: Write>(out: W, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["family", "model", "precision", "lo", "hi", "base_rate"])?;
    for r in &report.rows {
        let (Some(p), Some((lo, hi))) = (r.precision_pos, r.wilson_ci_95) else {
            continue;
        };
        w.write_record([
            r.family.to_string(),
            r.model.clone(),
            format!("{p:.6}"),
            format!("{lo:.6}"),
            format!("{hi:.6}"),
            format!("{:.6}", r.base_rate),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<plot csv>", e))
}
