//! Simplified curve-shape patterns: binary up/down step sequences of a fixed
//! length, counted as sliding (overlapping) occurrences inside price windows.
//!
//! Bit `i` of a pattern is set when step `i` is up; the earliest step is the
//! least-significant bit. A window of `s` prices carries patterns of length
//! `s - 1`, so the default window sizes {4, 5, 6, 7} give lengths 3..=6 and a
//! vocabulary of 8 + 16 + 32 + 64 = 120 patterns.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabeledWindow};
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::exec::Exec;
use crate::series::Sign;

pub const MAX_PATTERN_LEN: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignPattern {
    pub length: u8,
    pub bits: u32,
}

impl SignPattern {
    pub fn new(length: usize, bits: u32) -> Result<Self> {
        if length == 0 || length > MAX_PATTERN_LEN {
            return Err(invalid_input(format!("pattern length {length} outside 1..=19")));
        }
        if u64::from(bits) >= 1u64 << length {
            return Err(invalid_input(format!("bits {bits:#b} exceed length {length}")));
        }
        Ok(Self {
            length: length as u8,
            bits,
        })
    }

    pub fn from_signs(signs: &[Sign]) -> Result<Self> {
        let bits = signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::Up)
            .fold(0u32, |acc, (i, _)| acc | (1 << i));
        Self::new(signs.len(), bits)
    }

    pub fn len(self) -> usize {
        self.length as usize
    }

    pub fn is_empty(self) -> bool {
        self.length == 0
    }

    pub fn signs(self) -> Vec<Sign> {
        (0..self.len())
            .map(|i| if self.bits >> i & 1 == 1 { Sign::Up } else { Sign::Down })
            .collect()
    }

    /// Plain binary rendering of `bits`, zero-padded to `length` digits. The
    /// rightmost digit is the earliest step.
    pub fn binary_string(self) -> String {
        format!("{:0width$b}", self.bits, width = self.len())
    }
}

impl fmt::Display for SignPattern {
    /// `U`/`D` letters in time order, e.g. `UUD`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs() {
            f.write_str(if s == Sign::Up { "U" } else { "D" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternVocabulary {
    window_sizes: BTreeSet<usize>,
    patterns: Vec<SignPattern>,
    /// Position of the first pattern of each length, indexed by length.
    offsets: Vec<Option<usize>>,
}

impl PatternVocabulary {
    pub fn window_sizes(&self) -> &BTreeSet<usize> {
        &self.window_sizes
    }

    pub fn patterns(&self) -> &[SignPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn pattern_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.window_sizes.iter().map(|s| s - 1)
    }

    pub fn max_pattern_len(&self) -> usize {
        self.window_sizes.iter().next_back().map_or(0, |s| s - 1)
    }

    pub fn index_of(&self, p: SignPattern) -> Option<usize> {
        let off = (*self.offsets.get(p.len())?)?;
        Some(off + p.bits as usize)
    }

    /// Vocabulary positions holding patterns of length `len`.
    pub fn range_of_len(&self, len: usize) -> Option<std::ops::Range<usize>> {
        let off = (*self.offsets.get(len)?)?;
        Some(off..off + (1usize << len))
    }
}

pub fn enumerate_vocabulary(window_sizes: &[usize]) -> Result<PatternVocabulary> {
    if window_sizes.is_empty() {
        return Err(invalid_config("empty window-size set"));
    }
    let sizes: BTreeSet<usize> = window_sizes.iter().copied().collect();
    if let Some(bad) = sizes.iter().find(|&&s| !(2..=20).contains(&s)) {
        return Err(invalid_config(format!("window size {bad} outside 2..=20")));
    }
    let mut patterns = Vec::new();
    let mut offsets = vec![None; MAX_PATTERN_LEN + 1];
    for &s in &sizes {
        let len = s - 1;
        offsets[len] = Some(patterns.len());
        patterns.extend((0..1u32 << len).map(|bits| SignPattern {
            length: len as u8,
            bits,
        }));
    }
    Ok(PatternVocabulary {
        window_sizes: sizes,
        patterns,
        offsets,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub counts: Vec<u32>,
    pub window_ref: Option<String>,
}

/// Up-step flags of a price window; a flat step is down.
pub(crate) fn up_flags(prices: &[f64]) -> Vec<bool> {
    prices.windows(2).map(|w| w[1] - w[0] > 0.0).collect()
}

/// Sliding occurrences of a single pattern in a sequence of up-step flags.
pub fn count_occurrences(ups: &[bool], p: SignPattern) -> u32 {
    let len = p.len();
    if ups.len() < len {
        return 0;
    }
    ups.windows(len)
        .filter(|w| w.iter().enumerate().all(|(i, &up)| up == (p.bits >> i & 1 == 1)))
        .count() as u32
}

/// Adds the sliding pattern counts of `ups` into `counts`.
fn accumulate_counts(ups: &[bool], vocab: &PatternVocabulary, counts: &mut [u32]) {
    for len in vocab.pattern_lengths() {
        let off = vocab.offsets[len].expect("length present in vocabulary");
        if ups.len() < len {
            continue;
        }
        let mask = (1u32 << len) - 1;
        // Rolling code: earliest step of the current position in bit 0.
        let mut code = 0u32;
        for (i, &up) in ups.iter().enumerate() {
            code = (code >> 1) | (u32::from(up) << (len - 1));
            if i + 1 >= len {
                counts[off + (code & mask) as usize] += 1;
            }
        }
    }
}

pub fn count_patterns(window: &[f64], vocab: &PatternVocabulary) -> Result<FeatureVector> {
    let needed = vocab.max_pattern_len() + 1;
    if window.len() < needed {
        return Err(invalid_input(format!(
            "window of {} prices is shorter than the {needed} the vocabulary needs",
            window.len()
        )));
    }
    let mut counts = vec![0u32; vocab.len()];
    accumulate_counts(&up_flags(window), vocab, &mut counts);
    Ok(FeatureVector {
        counts,
        window_ref: None,
    })
}

/// Per-pattern occurrence totals over positive and negative windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceTable {
    pub count_pos: Vec<u64>,
    pub count_neg: Vec<u64>,
    pub n_pos_windows: usize,
    pub n_neg_windows: usize,
}

impl OccurrenceTable {
    /// Only one class present; effectiveness is undefined downstream.
    pub fn single_class(&self) -> bool {
        self.n_pos_windows == 0 || self.n_neg_windows == 0
    }

    pub fn swapped(&self) -> Self {
        Self {
            count_pos: self.count_neg.clone(),
            count_neg: self.count_pos.clone(),
            n_pos_windows: self.n_neg_windows,
            n_neg_windows: self.n_pos_windows,
        }
    }
}

const TABLE_CHUNK: usize = 2048;

pub fn occurrence_table(dataset: &Dataset, vocab: &PatternVocabulary) -> Result<OccurrenceTable> {
    occurrence_table_with(&dataset.windows, vocab, Exec::default())
}

pub fn occurrence_table_with(
    windows: &[LabeledWindow],
    vocab: &PatternVocabulary,
    exec: Exec,
) -> Result<OccurrenceTable> {
    let first = windows
        .first()
        .ok_or_else(|| invalid_input("empty dataset"))?;
    let w = first.prices.len();
    if windows.iter().any(|x| x.prices.len() != w) {
        return Err(invalid_input("windows are not of uniform size"));
    }
    if w < vocab.max_pattern_len() + 1 {
        return Err(invalid_input(format!(
            "windows of {w} prices are too short for the vocabulary"
        )));
    }
    let n = vocab.len();
    let chunks: Vec<&[LabeledWindow]> = windows.chunks(TABLE_CHUNK).collect();
    let partials = exec.map_slice(&chunks, |chunk| {
        let mut pos = vec![0u32; n];
        let mut neg = vec![0u32; n];
        let mut n_pos = 0usize;
        for win in chunk.iter() {
            let ups = up_flags(&win.prices);
            if win.label.is_positive() {
                n_pos += 1;
                accumulate_counts(&ups, vocab, &mut pos);
            } else {
                accumulate_counts(&ups, vocab, &mut neg);
            }
        }
        (pos, neg, n_pos, chunk.len() - n_pos)
    });
    let mut table = OccurrenceTable {
        count_pos: vec![0; n],
        count_neg: vec![0; n],
        n_pos_windows: 0,
        n_neg_windows: 0,
    };
    for (pos, neg, np, nn) in partials {
        for i in 0..n {
            table.count_pos[i] += u64::from(pos[i]);
            table.count_neg[i] += u64::from(neg[i]);
        }
        table.n_pos_windows += np;
        table.n_neg_windows += nn;
    }
    if table.single_class() {
        log::warn!("occurrence table built from a single-class dataset");
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessScore {
    pub log_odds: Vec<f64>,
    pub is_effective: Vec<bool>,
    pub threshold: f64,
}

impl EffectivenessScore {
    pub fn effective_indices(&self) -> Vec<usize> {
        (0..self.log_odds.len()).filter(|&i| self.is_effective[i]).collect()
    }

    /// The `k` positions with the largest `|log_odds|`; ties go to the
    /// earlier position.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.log_odds.len()).collect();
        idx.sort_by(|&a, &b| {
            self.log_odds[b]
                .abs()
                .total_cmp(&self.log_odds[a].abs())
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}

/// Smoothed log ratio of a pattern's occurrence rate in positive windows to
/// its rate in negative windows.
pub fn log_odds(c_pos: f64, n_pos: f64, c_neg: f64, n_neg: f64, alpha: f64) -> f64 {
    ((c_pos + alpha) / (n_pos + alpha)).ln() - ((c_neg + alpha) / (n_neg + alpha)).ln()
}

/// Scores every pattern. Rates are normalised by the class's total
/// occurrences of patterns of the same length.
pub fn effectiveness_scores(
    table: &OccurrenceTable,
    vocab: &PatternVocabulary,
    alpha: f64,
    tau: f64,
) -> Result<EffectivenessScore> {
    if !(alpha > 0.0) {
        return Err(invalid_config(format!("smoothing alpha {alpha} must be > 0")));
    }
    if !(tau >= 0.0) {
        return Err(invalid_config(format!("threshold tau {tau} must be >= 0")));
    }
    if table.count_pos.len() != vocab.len() || table.count_neg.len() != vocab.len() {
        return Err(invalid_input("occurrence table does not match vocabulary"));
    }
    let mut log_odds_v = vec![0.0; vocab.len()];
    for len in vocab.pattern_lengths() {
        let range = vocab.range_of_len(len).expect("length in vocabulary");
        let n_pos: u64 = table.count_pos[range.clone()].iter().sum();
        let n_neg: u64 = table.count_neg[range.clone()].iter().sum();
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::UndefinedEffectiveness(format!(
                "class totals for length {len} are ({n_pos}, {n_neg})"
            )));
        }
        for i in range {
            log_odds_v[i] = log_odds(
                table.count_pos[i] as f64,
                n_pos as f64,
                table.count_neg[i] as f64,
                n_neg as f64,
                alpha,
            );
        }
    }
    let is_effective = log_odds_v.iter().map(|l| l.abs() >= tau).collect();
    Ok(EffectivenessScore {
        log_odds: log_odds_v,
        is_effective,
        threshold: tau,
    })
}

/// Writes `length,bits_binary_string,count_pos,count_neg,log_odds,is_effective`
/// rows, one per vocabulary pattern.
pub fn write_effectiveness_csv<W: Write>(
    out: W,
    vocab: &PatternVocabulary,
    table: &OccurrenceTable,
    scores: &EffectivenessScore,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "length",
        "bits_binary_string",
        "count_pos",
        "count_neg",
        "log_odds",
        "is_effective",
    ])?;
    for (i, p) in vocab.patterns().iter().enumerate() {
        wtr.write_record([
            p.len().to_string(),
            p.binary_string(),
            table.count_pos[i].to_string(),
            table.count_neg[i].to_string(),
            scores.log_odds[i].to_string(),
            scores.is_effective[i].to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use crate::series::Family;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn monotone(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    fn prices_from_ups(ups: &[bool]) -> Vec<f64> {
        let mut p = vec![100.0];
        for &u in ups {
            let last = *p.last().unwrap();
            p.push(if u { last * 1.01 } else { last * 0.99 });
        }
        p
    }

    fn dataset(windows: Vec<LabeledWindow>) -> Dataset {
        Dataset {
            family: Family::Random,
            provenance: Provenance {
                config_hash: String::new(),
                seed: 0,
                generator: "test".into(),
                window: 20,
                overlapping: false,
            },
            windows,
        }
    }

    #[test]
    fn vocabulary_sizes() {
        assert_eq!(enumerate_vocabulary(&[4]).unwrap().len(), 8);
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        assert_eq!(v.len(), 120);
        let mut sorted = v.patterns().to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, v.patterns());
        let two = enumerate_vocabulary(&[2]).unwrap();
        let signs: Vec<_> = two.patterns().iter().map(|p| p.signs()).collect();
        assert_eq!(signs, vec![vec![Sign::Down], vec![Sign::Up]]);
        assert!(matches!(enumerate_vocabulary(&[]), Err(Error::InvalidConfig(_))));
        assert!(enumerate_vocabulary(&[1]).is_err());
        assert!(enumerate_vocabulary(&[21]).is_err());
    }

    #[test]
    fn pattern_encoding() {
        let p = SignPattern::from_signs(&[Sign::Up, Sign::Up, Sign::Down]).unwrap();
        assert_eq!(p.bits, 0b011);
        assert_eq!(p.binary_string(), "011");
        assert_eq!(p.to_string(), "UUD");
        assert!(SignPattern::new(3, 8).is_err());
    }

    #[test]
    fn monotone_window_counts() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let fv = count_patterns(&monotone(20), &v).unwrap();
        let uuu = v.index_of(SignPattern::new(3, 0b111).unwrap()).unwrap();
        assert_eq!(fv.counts[uuu], 17);
        for bits in 0..7 {
            let i = v.index_of(SignPattern::new(3, bits).unwrap()).unwrap();
            assert_eq!(fv.counts[i], 0);
        }
        assert!(count_patterns(&monotone(6), &v).is_err());
    }

    #[test]
    fn random_window_length_sums() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ups: Vec<bool> = (0..19).map(|_| rng.random()).collect();
        let fv = count_patterns(&prices_from_ups(&ups), &v).unwrap();
        let sum: u32 = fv.counts[v.range_of_len(5).unwrap()].iter().sum();
        assert_eq!(sum, 15);
    }

    /// Exhaustive scan of the sign string for each pattern, independent of
    /// the rolling-code counter.
    fn substring_count(ups: &[bool], p: SignPattern) -> u32 {
        let target: Vec<bool> = p.signs().iter().map(|s| *s == Sign::Up).collect();
        if ups.len() < target.len() {
            return 0;
        }
        (0..=ups.len() - target.len())
            .filter(|&i| ups[i..i + target.len()] == target[..])
            .count() as u32
    }

    #[test]
    fn counts_match_substring_scan_exhaustively() {
        let v = enumerate_vocabulary(&[4, 5]).unwrap();
        for w in 5..=12usize {
            for code in 0u32..(1 << (w - 1)) {
                let ups: Vec<bool> = (0..w - 1).map(|i| code >> i & 1 == 1).collect();
                let fv = count_patterns(&prices_from_ups(&ups), &v).unwrap();
                for (i, p) in v.patterns().iter().enumerate() {
                    assert_eq!(fv.counts[i], substring_count(&ups, *p));
                }
            }
        }
    }

    #[test]
    fn occurrence_table_examples() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let up = LabeledWindow::new("a", monotone(20), 0.01);
        let t = occurrence_table(&dataset(vec![up.clone()]), &v).unwrap();
        let uuu = v.index_of(SignPattern::new(3, 0b111).unwrap()).unwrap();
        assert_eq!((t.count_pos[uuu], t.count_neg[uuu]), (17, 0));
        assert!(t.single_class());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut wins = Vec::new();
        for i in 0..50 {
            let ups: Vec<bool> = (0..19).map(|_| rng.random()).collect();
            let p = prices_from_ups(&ups);
            wins.push(LabeledWindow::new(format!("p{i}"), p.clone(), 0.01));
            wins.push(LabeledWindow::new(format!("n{i}"), p, -0.01));
        }
        let t = occurrence_table(&dataset(wins), &v).unwrap();
        assert_eq!(t.count_pos, t.count_neg);
        assert!(occurrence_table(&dataset(vec![]), &v).is_err());
    }

    #[test]
    fn occurrence_table_matches_string_scan() {
        let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut wins = Vec::new();
        let mut sign_strings = Vec::new();
        for i in 0..1000 {
            let ups: Vec<bool> = (0..19).map(|_| rng.random()).collect();
            let ret = if rng.random::<bool>() { 0.01 } else { -0.01 };
            sign_strings.push((
                ups.iter().map(|&u| if u { 'U' } else { 'D' }).collect::<String>(),
                ret > 0.0,
            ));
            wins.push(LabeledWindow::new(format!("w{i}"), prices_from_ups(&ups), ret));
        }
        let t = occurrence_table_with(&wins, &v, Exec::Parallel).unwrap();
        assert_eq!(t, occurrence_table_with(&wins, &v, Exec::Sequential).unwrap());
        for (i, p) in v.patterns().iter().enumerate() {
            let needle = p.to_string();
            let (mut pos, mut neg) = (0u64, 0u64);
            for (s, is_pos) in &sign_strings {
                let c = (0..=s.len() - needle.len())
                    .filter(|&k| s[k..].starts_with(&needle))
                    .count() as u64;
                if *is_pos {
                    pos += c
                } else {
                    neg += c
                }
            }
            assert_eq!((t.count_pos[i], t.count_neg[i]), (pos, neg), "pattern {p}");
        }
        assert_eq!(t.n_pos_windows + t.n_neg_windows, 1000);
    }

    #[test]
    fn log_odds_examples() {
        let l = log_odds(100.0, 1e4, 1000.0, 1e4, 1.0);
        assert!((l - (101.0f64 / 1001.0).ln()).abs() < 1e-12);
        assert!((l + 2.294).abs() < 1e-3);
        assert!(l.abs() >= 1.0);
        assert_eq!(log_odds(500.0, 1e4, 500.0, 1e4, 1.0), 0.0);
        let l = log_odds(0.0, 1000.0, 10.0, 1000.0, 1.0);
        assert!((l - (1.0f64 / 11.0).ln()).abs() < 1e-12);
        assert!((l + 2.398).abs() < 1e-3);
    }

    #[test]
    fn effectiveness_errors_and_threshold() {
        let v = enumerate_vocabulary(&[4]).unwrap();
        let mut t = OccurrenceTable {
            count_pos: vec![10; 8],
            count_neg: vec![10; 8],
            n_pos_windows: 5,
            n_neg_windows: 5,
        };
        t.count_pos[3] = 100;
        // the boosted pattern also dilutes the others' positive rate
        let s = effectiveness_scores(&t, &v, 1.0, 1.0).unwrap();
        assert_eq!(s.effective_indices(), vec![3]);
        assert!(effectiveness_scores(&t, &v, 0.0, 0.5).is_err());
        t.count_neg = vec![0; 8];
        assert!(matches!(
            effectiveness_scores(&t, &v, 1.0, 0.5),
            Err(Error::UndefinedEffectiveness(_))
        ));
    }

    #[test]
    fn effectiveness_csv_has_row_per_pattern() {
        let v = enumerate_vocabulary(&[4]).unwrap();
        let t = OccurrenceTable {
            count_pos: (1..=8).collect(),
            count_neg: vec![4; 8],
            n_pos_windows: 1,
            n_neg_windows: 1,
        };
        let s = effectiveness_scores(&t, &v, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        write_effectiveness_csv(&mut buf, &v, &t, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(
            lines[0],
            "length,bits_binary_string,count_pos,count_neg,log_odds,is_effective"
        );
        assert!(lines[8].starts_with("3,111,8,4,"));
    }

    fn arb_table() -> impl Strategy<Value = OccurrenceTable> {
        (
            prop::collection::vec(0u64..500, 24),
            prop::collection::vec(0u64..500, 24),
        )
            .prop_map(|(mut p, mut n)| {
                // keep every length's class totals non-zero
                p[0] += 1;
                p[8] += 1;
                n[0] += 1;
                n[8] += 1;
                OccurrenceTable {
                    count_pos: p,
                    count_neg: n,
                    n_pos_windows: 10,
                    n_neg_windows: 10,
                }
            })
    }

    proptest! {
        #[test]
        fn count_sum_identity(ups in prop::collection::vec(any::<bool>(), 19)) {
            let v = enumerate_vocabulary(&[4, 5, 6, 7]).unwrap();
            let fv = count_patterns(&prices_from_ups(&ups), &v).unwrap();
            for len in 3..=6usize {
                let sum: u32 = fv.counts[v.range_of_len(len).unwrap()].iter().sum();
                prop_assert_eq!(sum as usize, 19 - len + 1);
            }
        }

        #[test]
        fn class_swap_negates(t in arb_table()) {
            let v = enumerate_vocabulary(&[4, 5]).unwrap();
            let a = effectiveness_scores(&t, &v, 1.0, 0.5).unwrap();
            let b = effectiveness_scores(&t.swapped(), &v, 1.0, 0.5).unwrap();
            for (x, y) in a.log_odds.iter().zip(&b.log_odds) {
                prop_assert_eq!(*x, -*y);
            }
            prop_assert_eq!(a.is_effective, b.is_effective);
        }

        #[test]
        fn positive_occurrence_never_lowers_log_odds(t in arb_table(), i in 0usize..24) {
            let v = enumerate_vocabulary(&[4, 5]).unwrap();
            let before = effectiveness_scores(&t, &v, 1.0, 0.5).unwrap().log_odds[i];
            let mut t2 = t.clone();
            t2.count_pos[i] += 1;
            let after = effectiveness_scores(&t2, &v, 1.0, 0.5).unwrap().log_odds[i];
            prop_assert!(after >= before);
        }
    }
}
