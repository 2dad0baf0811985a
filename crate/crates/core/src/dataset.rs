//! Labelled history windows and the datasets built from them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid_input, Result};
use crate::series::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_return(ret: f64) -> Self {
        if ret > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

/// A history window and the sign of the return that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub id: String,
    pub prices: Vec<f64>,
    pub label: Label,
    /// Simple return of the step after the last price in `prices`.
    pub ret: f64,
}

impl LabeledWindow {
    pub fn new(id: impl Into<String>, prices: Vec<f64>, ret: f64) -> Self {
        Self {
            id: id.into(),
            prices,
            label: Label::from_return(ret),
            ret,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub window: usize,
    /// Windows share prices with their neighbours (sliced from one path).
    pub overlapping: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub family: Family,
    pub provenance: Provenance,
    pub windows: Vec<LabeledWindow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.windows.first().map_or(self.provenance.window, |w| w.prices.len())
    }

    pub fn n_positive(&self) -> usize {
        self.windows.iter().filter(|w| w.label.is_positive()).count()
    }

    pub fn base_rate(&self) -> f64 {
        if self.windows.is_empty() {
            return f64::NAN;
        }
        self.n_positive() as f64 / self.len() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.n_positive();
        pos > 0 && pos < self.len()
    }

    /// Checks the structural invariants: uniform window size, consistent
    /// labels, unique ids, positive prices.
    pub fn validate(&self) -> Result<()> {
        let w = self.window_size();
        let mut ids = HashSet::with_capacity(self.len());
        for win in &self.windows {
            if win.prices.len() != w {
                return Err(invalid_input(format!(
                    "window {} has {} prices, expected {w}",
                    win.id,
                    win.prices.len()
                )));
            }
            if win.label != Label::from_return(win.ret) {
                return Err(invalid_input(format!(
                    "window {} label disagrees with return {}",
                    win.id, win.ret
                )));
            }
            if win.prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(invalid_input(format!("window {} has a non-positive price", win.id)));
            }
            if !ids.insert(win.id.as_str()) {
                return Err(invalid_input(format!("duplicate window id {}", win.id)));
            }
        }
        Ok(())
    }

    /// SHA-256 over ids, prices and returns (exact bit patterns).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.windows {
            h.update(w.id.as_bytes());
            h.update([0u8]);
            for p in &w.prices {
                h.update(p.to_bits().to_le_bytes());
            }
            h.update(w.ret.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// A dataset holding the windows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            family: self.family,
            provenance: self.provenance.clone(),
            windows: indices.iter().map(|&i| self.windows[i].clone()).collect(),
        }
    }
}

/// Shuffles `0..n` with a seeded stream and cuts off `round(fraction * n)`
/// indices as the holdout. Returns `(rest, holdout)`, each in ascending order.
pub fn shuffled_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut crate::rng::stream(seed, crate::rng::SPLIT, 0));
    let n_hold = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut holdout = idx[..n_hold].to_vec();
    let mut rest = idx[n_hold..].to_vec();
    holdout.sort_unstable();
    rest.sort_unstable();
    (rest, holdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_disjoint_cover() {
        let (a, b) = shuffled_split(1000, 0.3, 9);
        assert_eq!(b.len(), 300);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        assert_eq!(shuffled_split(1000, 0.3, 9), (a, b));
    }

    #[test]
    fn label_follows_return() {
        assert_eq!(LabeledWindow::new("a", vec![1.0, 2.0], 0.0).label, Label::Negative);
        assert_eq!(LabeledWindow::new("a", vec![1.0, 2.0], 1e-300).label, Label::Positive);
    }
}
