use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid_input, Error, Result};
use crate::exec::Exec;
use crate::series::simple_returns;

/// How a window's simple returns are turned into learner inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// +1 for an up step, −1 otherwise.
    #[default]
    Sign,
    /// Standardised within the window.
    Zscore,
    Raw,
}

impl Scaling {
    pub fn as_str(self) -> &'static str {
        match self {
            Scaling::Sign => "sign",
            Scaling::Zscore => "zscore",
            Scaling::Raw => "raw",
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Scaling::Sign, Scaling::Zscore, Scaling::Raw]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid_input(format!("unknown scaling {s:?} (sign, zscore, raw)")))
    }
}

/// Per-step inputs of a window. Under `Zscore` a window with zero return
/// spread maps to all zeros.
pub fn window_features(prices: &[f64], scaling: Scaling) -> Result<Vec<f64>> {
    let mut r = simple_returns(prices)?;
    if r.iter().any(|x| !x.is_finite()) {
        return Err(invalid_input("non-finite return in window"));
    }
    match scaling {
        Scaling::Sign => r.iter_mut().for_each(|x| *x = if *x > 0.0 { 1.0 } else { -1.0 }),
        Scaling::Zscore => {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            for x in &mut r {
                *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
            }
        }
        Scaling::Raw => {}
    }
    Ok(r)
}

/// Row-major feature matrix with {0, 1} labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(invalid_input(format!("{} rows for {} labels", rows.len(), labels.len())));
        }
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(invalid_input("feature rows differ in length"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(invalid_input("labels must be 0 or 1"));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid_input("non-finite feature"));
        }
        Ok(Self {
            n_rows: labels.len(),
            n_cols,
            data,
            labels,
        })
    }

    pub fn from_dataset(dataset: &Dataset, scaling: Scaling, exec: Exec) -> Result<Self> {
        let rows = exec
            .map_slice(&dataset.windows, |w| window_features(&w.prices, scaling))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let labels = dataset.windows.iter().map(|w| w.label.as_u8()).collect();
        Self::new(rows, labels)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.n_positive();
        p > 0 && p < self.n_rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscored_returns_have_unit_spread() {
        let prices = [100.0, 101.0, 99.0, 102.0, 102.0, 103.5];
        let z = window_features(&prices, Scaling::Zscore).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        assert_eq!(window_features(&[5.0; 6], Scaling::Zscore).unwrap(), vec![0.0; 5]);
        assert_eq!(window_features(&[1.0, 2.0, 3.0], Scaling::Raw).unwrap(), vec![1.0, 0.5]);
        let signs = window_features(&[1.0, 2.0, 2.0, 1.0], Scaling::Sign).unwrap();
        assert_eq!(signs, vec![1.0, -1.0, -1.0]);
        assert_eq!("zscore".parse::<Scaling>().unwrap(), Scaling::Zscore);
    }

    #[test]
    fn matrix_rejects_ragged_rows() {
        assert!(FeatureMatrix::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1]).is_err());
        assert!(FeatureMatrix::new(vec![vec![f64::NAN]], vec![0]).is_err());
        let m = FeatureMatrix::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert!(m.has_both_classes());
    }
}
