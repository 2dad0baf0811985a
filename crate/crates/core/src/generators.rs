//! Synthetic datasets whose next-step return is tied to the history window in
//! a controlled way.
//!
//! Every window is a multiplicative random walk: each step has a fair-coin
//! direction and a lognormal log-return magnitude, so prices stay positive.
//! What differs between families is how the sign of the step *after* the
//! window is drawn:
//!
//! * `csf`: positive with probability `p_signal` when the weighted pattern
//!   score exceeds the rule threshold, otherwise with `q_off`;
//! * `ncsf`: the same mixture, keyed on the fraction of up-steps reaching
//!   the rule's ratio;
//! * `random`: positive with the base rate, independent of the window.
//!
//! `q_off` is solved from `b = s * p_signal + (1 - s) * q_off` with `s` the
//! realised signal fraction, so the unconditional positive rate is `b` in
//! expectation.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, Label, LabeledWindow, Provenance};
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::exec::Exec;
use crate::patterns::{count_patterns, enumerate_vocabulary, PatternVocabulary, SignPattern};
use crate::rng;
use crate::series::Family;

pub const GENERATOR_VERSION: &str = "csfbench-gen/1";
pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_P_SIGNAL: f64 = 0.75;
pub const DEFAULT_BASE_RATE: f64 = 0.52;
pub const DEFAULT_RATIO: f64 = 0.7;
pub const DEFAULT_QUANTILE: f64 = 0.8;
pub const DEFAULT_CALIBRATION_N: usize = 10_000;

/// Lognormal distribution of the absolute log-return of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepModel {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for StepModel {
    fn default() -> Self {
        Self {
            mu: 0.01f64.ln(),
            sigma: 0.5,
        }
    }
}

impl StepModel {
    fn distribution(&self) -> Result<LogNormal<f64>> {
        LogNormal::new(self.mu, self.sigma)
            .map_err(|e| invalid_config(format!("step model ({}, {}): {e}", self.mu, self.sigma)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Each window is its own walk; labels are i.i.d. given the features.
    #[default]
    Independent,
    /// Windows are stride-1 slices of one long path whose steps follow the
    /// rule; neighbouring windows overlap.
    LongPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub n_windows: usize,
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub step: StepModel,
    #[serde(default = "default_start_price")]
    pub start_price: f64,
    /// Positive-label rate of the random family.
    #[serde(default = "default_base_rate")]
    pub base_rate: f64,
    #[serde(default)]
    pub layout: Layout,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_start_price() -> f64 {
    100.0
}
fn default_base_rate() -> f64 {
    DEFAULT_BASE_RATE
}

impl GenConfig {
    pub fn new(n_windows: usize, seed: u64) -> Self {
        Self {
            n_windows,
            seed,
            window: DEFAULT_WINDOW,
            step: StepModel::default(),
            start_price: default_start_price(),
            base_rate: DEFAULT_BASE_RATE,
            layout: Layout::Independent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_windows == 0 {
            return Err(invalid_config("n_windows must be > 0"));
        }
        if self.window < 2 {
            return Err(invalid_config(format!("window {} < 2", self.window)));
        }
        if !(self.step.sigma > 0.0 && self.step.sigma.is_finite() && self.step.mu.is_finite()) {
            return Err(invalid_config("step model needs finite mu and sigma > 0"));
        }
        if !(self.start_price > 0.0 && self.start_price.is_finite()) {
            return Err(invalid_config("start price must be positive"));
        }
        if !(0.0..=1.0).contains(&self.base_rate) {
            return Err(invalid_config(format!("base rate {} outside [0, 1]", self.base_rate)));
        }
        Ok(())
    }
}

fn check_probabilities(p_signal: f64, base_rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&base_rate) {
        return Err(invalid_config(format!("base rate {base_rate} outside [0, 1]")));
    }
    if !(p_signal > base_rate && p_signal <= 1.0) {
        return Err(invalid_config(format!(
            "p_signal {p_signal} must lie in (base rate {base_rate}, 1]"
        )));
    }
    Ok(())
}

/// Pattern-weight rule: the score of a window is the weighted sum of its
/// pattern counts; windows scoring above `threshold` carry the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CsfRule {
    vocab: PatternVocabulary,
    weights: Vec<f64>,
    pub threshold: Option<f64>,
    pub p_signal: f64,
    pub base_rate: f64,
    pub window: usize,
    /// Fraction of calibration windows above the threshold.
    pub signal_fraction: Option<f64>,
}

impl CsfRule {
    pub fn new(vocab: PatternVocabulary, weights: Vec<f64>, window: usize) -> Result<Self> {
        if weights.len() != vocab.len() {
            return Err(invalid_config(format!(
                "{} weights for a vocabulary of {}",
                weights.len(),
                vocab.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid_config("non-finite weight"));
        }
        if window < vocab.max_pattern_len() + 1 {
            return Err(invalid_config(format!(
                "window {window} too short for the rule vocabulary"
            )));
        }
        Ok(Self {
            vocab,
            weights,
            threshold: None,
            p_signal: DEFAULT_P_SIGNAL,
            base_rate: DEFAULT_BASE_RATE,
            window,
            signal_fraction: None,
        })
    }

    pub fn with_probabilities(mut self, p_signal: f64, base_rate: f64) -> Result<Self> {
        check_probabilities(p_signal, base_rate)?;
        self.p_signal = p_signal;
        self.base_rate = base_rate;
        Ok(self)
    }

    pub fn vocab(&self) -> &PatternVocabulary {
        &self.vocab
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k_effective(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    /// Patterns carrying a nonzero weight, in vocabulary order.
    pub fn active_patterns(&self) -> Vec<SignPattern> {
        self.vocab
            .patterns()
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn score(&self, prices: &[f64]) -> Result<f64> {
        let fv = count_patterns(prices, &self.vocab)?;
        Ok(self
            .weights
            .iter()
            .zip(&fv.counts)
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, c)| w * f64::from(*c))
            .sum())
    }

    pub fn calibrated_threshold(&self) -> Result<f64> {
        self.threshold
            .ok_or_else(|| Error::InvalidRule("CSF rule threshold is not calibrated".into()))
    }

    /// Strict comparison: a score equal to the threshold is not a signal.
    pub fn is_signal(&self, prices: &[f64]) -> Result<bool> {
        let theta = self.calibrated_threshold()?;
        Ok(self.score(prices)? > theta)
    }

    pub fn to_spec(&self) -> CsfRuleSpec {
        CsfRuleSpec {
            schema: CSF_RULE_SCHEMA.to_string(),
            window: self.window,
            window_sizes: self.vocab.window_sizes().iter().copied().collect(),
            weights: self
                .vocab
                .patterns()
                .iter()
                .zip(&self.weights)
                .filter(|(_, w)| **w != 0.0)
                .map(|(p, w)| PatternWeight {
                    length: p.len(),
                    bits: p.bits,
                    weight: *w,
                })
                .collect(),
            threshold: self.threshold,
            p_signal: self.p_signal,
            base_rate: self.base_rate,
            signal_fraction: self.signal_fraction,
        }
    }

    pub fn from_spec(spec: &CsfRuleSpec) -> Result<Self> {
        if spec.schema != CSF_RULE_SCHEMA {
            return Err(Error::UnsupportedSchema {
                found: spec.schema.clone(),
                expected: CSF_RULE_SCHEMA.into(),
            });
        }
        let vocab = enumerate_vocabulary(&spec.window_sizes)?;
        let mut weights = vec![0.0; vocab.len()];
        for pw in &spec.weights {
            let p = SignPattern::new(pw.length, pw.bits)?;
            let i = vocab
                .index_of(p)
                .ok_or_else(|| Error::InvalidRule(format!("pattern {p} not in vocabulary")))?;
            weights[i] = pw.weight;
        }
        let mut rule = CsfRule::new(vocab, weights, spec.window)?
            .with_probabilities(spec.p_signal, spec.base_rate)?;
        if let Some(t) = spec.threshold {
            if !t.is_finite() {
                return Err(Error::InvalidRule("non-finite threshold".into()));
            }
        }
        rule.threshold = spec.threshold;
        rule.signal_fraction = spec.signal_fraction;
        Ok(rule)
    }
}

pub const CSF_RULE_SCHEMA: &str = "csfrule-v1";
pub const NCSF_RULE_SCHEMA: &str = "ncsfrule-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternWeight {
    pub length: usize,
    pub bits: u32,
    pub weight: f64,
}

/// Serialised form of [`CsfRule`]; only nonzero weights are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsfRuleSpec {
    pub schema: String,
    pub window: usize,
    pub window_sizes: Vec<usize>,
    pub weights: Vec<PatternWeight>,
    pub threshold: Option<f64>,
    pub p_signal: f64,
    pub base_rate: f64,
    pub signal_fraction: Option<f64>,
}

/// Momentum rule: a window carries the signal when its share of up-steps
/// reaches `ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcsfRule {
    pub schema: String,
    pub window: usize,
    pub ratio: f64,
    pub p_signal: f64,
    pub base_rate: f64,
}

impl Default for NcsfRule {
    fn default() -> Self {
        Self {
            schema: NCSF_RULE_SCHEMA.into(),
            window: DEFAULT_WINDOW,
            ratio: DEFAULT_RATIO,
            p_signal: DEFAULT_P_SIGNAL,
            base_rate: DEFAULT_BASE_RATE,
        }
    }
}

impl NcsfRule {
    pub fn new(window: usize, ratio: f64, p_signal: f64, base_rate: f64) -> Result<Self> {
        let rule = Self {
            schema: NCSF_RULE_SCHEMA.into(),
            window,
            ratio,
            p_signal,
            base_rate,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != NCSF_RULE_SCHEMA {
            return Err(Error::UnsupportedSchema {
                found: self.schema.clone(),
                expected: NCSF_RULE_SCHEMA.into(),
            });
        }
        if self.window < 2 {
            return Err(invalid_config(format!("window {} < 2", self.window)));
        }
        if !(self.ratio > 0.5 && self.ratio <= 1.0) {
            return Err(invalid_config(format!("ratio {} outside (0.5, 1]", self.ratio)));
        }
        check_probabilities(self.p_signal, self.base_rate)
    }

    pub fn up_ratio(&self, prices: &[f64]) -> Result<f64> {
        if prices.len() != self.window {
            return Err(invalid_input(format!(
                "window of {} prices, rule expects {}",
                prices.len(),
                self.window
            )));
        }
        let ups = prices.windows(2).filter(|w| w[1] - w[0] > 0.0).count();
        Ok(ups as f64 / (self.window - 1) as f64)
    }

    pub fn is_signal(&self, prices: &[f64]) -> Result<bool> {
        Ok(self.up_ratio(prices)? >= self.ratio)
    }

    /// Exact probability that a fair-coin walk of `window` prices carries
    /// the signal.
    pub fn random_walk_signal_probability(&self) -> f64 {
        let steps = self.window - 1;
        (0..=steps)
            .filter(|&k| k as f64 / steps as f64 >= self.ratio)
            .map(|k| binomial(steps, k) / 2f64.powi(steps as i32))
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Draws `k_effective` distinct patterns with weights uniform on
/// `[-1, -0.2] ∪ [0.2, 1]`. The threshold is left uncalibrated.
pub fn sample_csf_rule(vocab: &PatternVocabulary, k_effective: usize, seed: u64) -> Result<CsfRule> {
    if k_effective == 0 || k_effective > vocab.len() {
        return Err(invalid_config(format!(
            "k_effective {k_effective} outside 1..={}",
            vocab.len()
        )));
    }
    let mut r = rng::stream(seed, rng::RULE, 0);
    let mut chosen = index::sample(&mut r, vocab.len(), k_effective).into_vec();
    chosen.sort_unstable();
    let mut weights = vec![0.0; vocab.len()];
    for i in chosen {
        let magnitude = r.random_range(0.2..=1.0);
        weights[i] = if r.random::<bool>() { magnitude } else { -magnitude };
    }
    let window = DEFAULT_WINDOW.max(vocab.max_pattern_len() + 1);
    CsfRule::new(vocab.clone(), weights, window)
}

fn random_walk<R: Rng>(r: &mut R, len: usize, start: f64, step: &LogNormal<f64>) -> Vec<f64> {
    let mut prices = Vec::with_capacity(len);
    prices.push(start);
    for _ in 1..len {
        let m = step.sample(r);
        let up = r.random::<bool>();
        let last = *prices.last().expect("non-empty");
        prices.push(last * if up { m.exp() } else { (-m).exp() });
    }
    prices
}

/// Sets the rule threshold to the empirical `q`-quantile of scores over
/// `calibration_n` fresh random-walk windows and returns it.
pub fn calibrate_threshold(rule: &mut CsfRule, q: f64, calibration_n: usize, seed: u64) -> Result<f64> {
    calibrate_threshold_with(rule, q, calibration_n, seed, Exec::default())
}

pub fn calibrate_threshold_with(
    rule: &mut CsfRule,
    q: f64,
    calibration_n: usize,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid_config(format!("quantile {q} must lie in (0, 1)")));
    }
    if calibration_n < 100 {
        return Err(invalid_config(format!("calibration_n {calibration_n} < 100")));
    }
    let step = StepModel::default().distribution()?;
    let window = rule.window;
    let scores = exec.map_indexed(calibration_n, |i| {
        let mut r = rng::stream(seed, rng::CALIBRATE, i as u64);
        rule.score(&random_walk(&mut r, window, 100.0, &step))
    });
    let mut scores = scores.into_iter().collect::<Result<Vec<f64>>>()?;
    scores.sort_by(f64::total_cmp);
    let rank = ((q * calibration_n as f64).ceil() as usize).clamp(1, calibration_n);
    let theta = scores[rank - 1];
    let above = scores.iter().filter(|s| **s > theta).count();
    rule.threshold = Some(theta);
    rule.signal_fraction = Some(above as f64 / calibration_n as f64);
    Ok(theta)
}

/// Probability of a positive label outside the signal region.
pub fn off_signal_probability(base_rate: f64, p_signal: f64, signal_fraction: f64) -> Result<f64> {
    if signal_fraction >= 1.0 {
        return Ok(p_signal);
    }
    let q_off = (base_rate - signal_fraction * p_signal) / (1.0 - signal_fraction);
    if !(0.0..=1.0).contains(&q_off) {
        return Err(Error::InfeasibleCalibration {
            q_off,
            base_rate,
            p_signal,
            signal_fraction,
        });
    }
    Ok(q_off)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSummary {
    /// Fraction of windows satisfying the rule (0 for the random family).
    pub signal_fraction: f64,
    /// Positive-label probability outside the signal region.
    pub q_off: f64,
}

/// Label mechanism shared by the three families.
struct LabelRule<'a> {
    signal: Option<&'a (dyn Fn(&[f64]) -> Result<bool> + Sync)>,
    p_signal: f64,
    base_rate: f64,
    /// Signal fraction assumed by the long-path layout, which cannot see
    /// the realised fraction before drawing.
    nominal_signal_fraction: f64,
}

fn generate(
    family: Family,
    cfg: &GenConfig,
    labels: LabelRule<'_>,
    rule_json: serde_json::Value,
    exec: Exec,
) -> Result<(Dataset, GenerationSummary)> {
    cfg.validate()?;
    let step = cfg.step.distribution()?;
    let provenance = Provenance {
        config_hash: config_hash(family, cfg, &rule_json)?,
        seed: cfg.seed,
        generator: GENERATOR_VERSION.into(),
        window: cfg.window,
        overlapping: cfg.layout == Layout::LongPath,
    };
    let (windows, summary) = match cfg.layout {
        Layout::Independent => independent_windows(family, cfg, &labels, &step, exec)?,
        Layout::LongPath => long_path_windows(family, cfg, &labels, &step)?,
    };
    Ok((
        Dataset {
            family,
            provenance,
            windows,
        },
        summary,
    ))
}

fn window_id(family: Family, i: usize) -> String {
    format!("{family}-{i:06}")
}

fn draw_next_return<R: Rng>(r: &mut R, p_positive: f64, step: &LogNormal<f64>) -> f64 {
    let up = r.random::<f64>() < p_positive;
    let m = step.sample(r);
    if up {
        m.exp_m1()
    } else {
        (-m).exp_m1()
    }
}

fn independent_windows(
    family: Family,
    cfg: &GenConfig,
    labels: &LabelRule<'_>,
    step: &LogNormal<f64>,
    exec: Exec,
) -> Result<(Vec<LabeledWindow>, GenerationSummary)> {
    let n = cfg.n_windows;
    let paths = exec.map_indexed(n, |i| -> Result<(Vec<f64>, bool)> {
        let mut r = rng::stream(cfg.seed, rng::PATH, i as u64);
        let prices = random_walk(&mut r, cfg.window, cfg.start_price, step);
        let sig = match labels.signal {
            Some(f) => f(&prices)?,
            None => false,
        };
        Ok((prices, sig))
    });
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    let (s, q_off) = match labels.signal {
        Some(_) => {
            let s = paths.iter().filter(|(_, sig)| *sig).count() as f64 / n as f64;
            (s, off_signal_probability(labels.base_rate, labels.p_signal, s)?)
        }
        None => (0.0, labels.base_rate),
    };
    let windows = exec.map_indexed(n, |i| {
        let (prices, sig) = &paths[i];
        let mut r = rng::stream(cfg.seed, rng::LABEL, i as u64);
        let p = if *sig { labels.p_signal } else { q_off };
        LabeledWindow::new(window_id(family, i), prices.clone(), draw_next_return(&mut r, p, step))
    });
    Ok((
        windows,
        GenerationSummary {
            signal_fraction: s,
            q_off,
        },
    ))
}

fn long_path_windows(
    family: Family,
    cfg: &GenConfig,
    labels: &LabelRule<'_>,
    step: &LogNormal<f64>,
) -> Result<(Vec<LabeledWindow>, GenerationSummary)> {
    let w = cfg.window;
    let q_off = match labels.signal {
        Some(_) => off_signal_probability(
            labels.base_rate,
            labels.p_signal,
            labels.nominal_signal_fraction,
        )?,
        None => labels.base_rate,
    };
    let mut r = rng::stream(cfg.seed, rng::PATH, 0);
    let mut prices = random_walk(&mut r, w, cfg.start_price, step);
    let mut n_signal = 0usize;
    for _ in 0..cfg.n_windows {
        let hist = &prices[prices.len() - w..];
        let p = match labels.signal {
            Some(f) if f(hist)? => {
                n_signal += 1;
                labels.p_signal
            }
            Some(_) => q_off,
            None => labels.base_rate,
        };
        let ret = draw_next_return(&mut r, p, step);
        let last = *prices.last().expect("non-empty");
        prices.push(last * (1.0 + ret));
    }
    let windows = (0..cfg.n_windows)
        .map(|i| {
            let hist = prices[i..i + w].to_vec();
            let ret = prices[i + w] / prices[i + w - 1] - 1.0;
            LabeledWindow {
                id: window_id(family, i),
                prices: hist,
                label: Label::from_return(ret),
                ret,
            }
        })
        .collect();
    Ok((
        windows,
        GenerationSummary {
            signal_fraction: n_signal as f64 / cfg.n_windows as f64,
            q_off,
        },
    ))
}

fn config_hash(family: Family, cfg: &GenConfig, rule: &serde_json::Value) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::json!({
        "family": family,
        "config": cfg,
        "rule": rule,
        "generator": GENERATOR_VERSION,
    }))?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

pub fn generate_csf(rule: &CsfRule, cfg: &GenConfig) -> Result<Dataset> {
    Ok(generate_csf_with(rule, cfg, Exec::default())?.0)
}

pub fn generate_csf_with(
    rule: &CsfRule,
    cfg: &GenConfig,
    exec: Exec,
) -> Result<(Dataset, GenerationSummary)> {
    let theta = rule.calibrated_threshold()?;
    if rule.window != cfg.window {
        return Err(invalid_config(format!(
            "rule window {} differs from config window {}",
            rule.window, cfg.window
        )));
    }
    check_probabilities(rule.p_signal, rule.base_rate)?;
    let signal = move |p: &[f64]| -> Result<bool> { Ok(rule.score(p)? > theta) };
    let labels = LabelRule {
        signal: Some(&signal),
        p_signal: rule.p_signal,
        base_rate: rule.base_rate,
        nominal_signal_fraction: rule.signal_fraction.unwrap_or(1.0 - DEFAULT_QUANTILE),
    };
    generate(Family::Csf, cfg, labels, serde_json::to_value(rule.to_spec())?, exec)
}

pub fn generate_ncsf(rule: &NcsfRule, cfg: &GenConfig) -> Result<Dataset> {
    Ok(generate_ncsf_with(rule, cfg, Exec::default())?.0)
}

pub fn generate_ncsf_with(
    rule: &NcsfRule,
    cfg: &GenConfig,
    exec: Exec,
) -> Result<(Dataset, GenerationSummary)> {
    rule.validate()?;
    if rule.window != cfg.window {
        return Err(invalid_config(format!(
            "rule window {} differs from config window {}",
            rule.window, cfg.window
        )));
    }
    let signal = |p: &[f64]| rule.is_signal(p);
    let labels = LabelRule {
        signal: Some(&signal),
        p_signal: rule.p_signal,
        base_rate: rule.base_rate,
        nominal_signal_fraction: rule.random_walk_signal_probability(),
    };
    generate(Family::Ncsf, cfg, labels, serde_json::to_value(rule)?, exec)
}

pub fn generate_random(cfg: &GenConfig) -> Result<Dataset> {
    Ok(generate_random_with(cfg, Exec::default())?.0)
}

pub fn generate_random_with(cfg: &GenConfig, exec: Exec) -> Result<(Dataset, GenerationSummary)> {
    let labels = LabelRule {
        signal: None,
        p_signal: cfg.base_rate,
        base_rate: cfg.base_rate,
        nominal_signal_fraction: 0.0,
    };
    generate(Family::Random, cfg, labels, serde_json::Value::Null, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_vocab() -> PatternVocabulary {
        enumerate_vocabulary(&[4, 5, 6, 7]).unwrap()
    }

    fn calibrated(seed: u64) -> CsfRule {
        let mut rule = sample_csf_rule(&default_vocab(), 10, seed).unwrap();
        calibrate_threshold(&mut rule, DEFAULT_QUANTILE, DEFAULT_CALIBRATION_N, seed).unwrap();
        rule
    }

    #[test]
    fn rule_sampling_contract() {
        let v = default_vocab();
        assert!(matches!(sample_csf_rule(&v, 0, 1), Err(Error::InvalidConfig(_))));
        assert!(sample_csf_rule(&v, 121, 1).is_err());
        let all = sample_csf_rule(&v, v.len(), 1).unwrap();
        assert_eq!(all.k_effective(), 120);
        let a = sample_csf_rule(&v, 10, 42).unwrap();
        let b = sample_csf_rule(&v, 10, 42).unwrap();
        let bytes = |r: &CsfRule| r.weights().iter().flat_map(|w| w.to_le_bytes()).collect::<Vec<u8>>();
        assert_eq!(bytes(&a), bytes(&b));
        assert_eq!(a.k_effective(), 10);
        assert!(a
            .weights()
            .iter()
            .filter(|w| **w != 0.0)
            .all(|w| (0.2..=1.0).contains(&w.abs())));
    }

    #[test]
    fn calibration_bounds_and_zero_rule() {
        let v = default_vocab();
        let mut rule = sample_csf_rule(&v, 10, 3).unwrap();
        assert!(calibrate_threshold(&mut rule, 0.0, 1000, 1).is_err());
        assert!(calibrate_threshold(&mut rule, 1.0, 1000, 1).is_err());
        assert!(calibrate_threshold(&mut rule, 0.8, 99, 1).is_err());

        let mut zero = CsfRule::new(v.clone(), vec![0.0; v.len()], 20).unwrap();
        assert_eq!(calibrate_threshold(&mut zero, 0.8, 1000, 1).unwrap(), 0.0);
        let ds = generate_csf(&zero, &GenConfig::new(2000, 5)).unwrap();
        let rate = ds.base_rate();
        assert!((rate - 0.52).abs() < 0.05, "{rate}");
    }

    #[test]
    fn calibrated_quantile_holds_on_fresh_windows() {
        let rule = calibrated(11);
        let step = StepModel::default().distribution().unwrap();
        let n = 10_000;
        let above = (0..n)
            .filter(|&i| {
                let mut r = rng::stream(999, rng::PATH, i);
                rule.is_signal(&random_walk(&mut r, 20, 100.0, &step)).unwrap()
            })
            .count();
        let frac = above as f64 / n as f64;
        assert!((0.17..=0.23).contains(&frac), "{frac}");
    }

    #[test]
    fn off_signal_algebra() {
        let q = off_signal_probability(0.52, 0.75, 0.2).unwrap();
        assert!((q - 0.4625).abs() < 1e-12);
        assert!(matches!(
            off_signal_probability(0.1, 0.75, 0.5),
            Err(Error::InfeasibleCalibration { .. })
        ));
    }

    #[test]
    fn uncalibrated_rule_rejected() {
        let rule = sample_csf_rule(&default_vocab(), 10, 1).unwrap();
        assert!(matches!(
            generate_csf(&rule, &GenConfig::new(10, 1)),
            Err(Error::InvalidRule(_))
        ));
    }

    #[test]
    fn csf_label_rates() {
        let rule = calibrated(42);
        let (ds, summary) = generate_csf_with(&rule, &GenConfig::new(20_000, 42), Exec::Parallel).unwrap();
        let rate = ds.base_rate();
        assert!((0.50..=0.54).contains(&rate), "{rate}");
        let (mut sel, mut pos) = (0, 0);
        for w in &ds.windows {
            if rule.is_signal(&w.prices).unwrap() {
                sel += 1;
                pos += usize::from(w.label.is_positive());
            }
        }
        assert!((sel as f64 / 20_000.0 - summary.signal_fraction).abs() < 1e-12);
        let prec = pos as f64 / sel as f64;
        assert!((0.73..=0.77).contains(&prec), "{prec}");
    }

    #[test]
    fn ncsf_signal_region() {
        let rule = NcsfRule::default();
        // ceil(0.7 * 19) = 14
        let mut p = vec![100.0];
        for i in 0..19 {
            let last: f64 = *p.last().unwrap();
            p.push(if i < 14 { last + 1.0 } else { last - 1.0 });
        }
        assert!(rule.is_signal(&p).unwrap());
        // flat first step counts as down
        p[1] = p[0];
        assert_eq!(rule.up_ratio(&p).unwrap(), 13.0 / 19.0);
        assert!(!rule.is_signal(&p).unwrap());

        let oracle: f64 = (14..=19).map(|k| binomial(19, k)).sum::<f64>() / 2f64.powi(19);
        assert!((oracle - 0.0318).abs() < 1e-4);
        assert!((rule.random_walk_signal_probability() - oracle).abs() < 1e-15);
        assert!(NcsfRule::new(20, 0.5, 0.75, 0.52).is_err());
        assert!(NcsfRule::new(20, 0.7, 0.5, 0.52).is_err());
    }

    #[test]
    fn ncsf_signal_fraction() {
        let (ds, summary) =
            generate_ncsf_with(&NcsfRule::default(), &GenConfig::new(50_000, 8), Exec::Parallel).unwrap();
        assert!((0.028..=0.036).contains(&summary.signal_fraction), "{}", summary.signal_fraction);
        assert_eq!(ds.len(), 50_000);
    }

    #[test]
    fn random_family_rate_and_determinism() {
        let cfg = GenConfig::new(20_000, 17);
        let a = generate_random(&cfg).unwrap();
        let rate = a.base_rate();
        assert!((0.50..=0.54).contains(&rate), "{rate}");
        let (b, _) = generate_random_with(&cfg, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.windows.iter().all(|w| w.prices.iter().all(|p| *p > 0.0)));
        a.validate().unwrap();
    }

    #[test]
    fn long_path_layout_overlaps() {
        let mut cfg = GenConfig::new(500, 4);
        cfg.layout = Layout::LongPath;
        let ds = generate_ncsf(&NcsfRule::default(), &cfg).unwrap();
        assert!(ds.provenance.overlapping);
        assert_eq!(ds.windows[0].prices[1..], ds.windows[1].prices[..19]);
        ds.validate().unwrap();
        let rule = calibrated(4);
        generate_csf(&rule, &cfg).unwrap().validate().unwrap();
    }

    #[test]
    fn rule_spec_round_trip() {
        let rule = calibrated(6);
        let json = serde_json::to_string(&rule.to_spec()).unwrap();
        let spec: CsfRuleSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(CsfRule::from_spec(&spec).unwrap(), rule);
    }
}
