//! Price series and the elementary transforms built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};

/// Where a series (or dataset) came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Csf,
    Ncsf,
    Random,
    Real,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Csf, Family::Ncsf, Family::Random, Family::Real];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Csf => "csf",
            Family::Ncsf => "ncsf",
            Family::Random => "random",
            Family::Real => "real",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csf" => Ok(Family::Csf),
            "ncsf" => Ok(Family::Ncsf),
            "random" => Ok(Family::Random),
            "real" => Ok(Family::Real),
            other => Err(invalid_input(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub id: String,
    pub prices: Vec<f64>,
    pub source: Family,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl PriceSeries {
    pub fn new(id: impl Into<String>, prices: Vec<f64>, source: Family) -> Result<Self> {
        check_prices(&prices, 1)?;
        Ok(Self {
            id: id.into(),
            prices,
            source,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSequence {
    pub signs: Vec<Sign>,
    /// Series id and window offset, when known.
    pub derived_from: Option<(String, usize)>,
}

impl SignSequence {
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn up_count(&self) -> usize {
        self.signs.iter().filter(|&&s| s == Sign::Up).count()
    }
}

fn check_prices(prices: &[f64], min_len: usize) -> Result<()> {
    if prices.len() < min_len {
        return Err(invalid_input(format!(
            "need at least {min_len} prices, got {}",
            prices.len()
        )));
    }
    if let Some((i, p)) = prices
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && **p > 0.0))
    {
        return Err(invalid_input(format!("price {p} at index {i} is not positive")));
    }
    Ok(())
}

/// Up/down steps of a price path. A flat step counts as down.
pub fn diff_signs(prices: &[f64]) -> Result<SignSequence> {
    check_prices(prices, 2)?;
    let signs = prices
        .windows(2)
        .map(|w| if w[1] - w[0] > 0.0 { Sign::Up } else { Sign::Down })
        .collect();
    Ok(SignSequence {
        signs,
        derived_from: None,
    })
}

pub fn simple_returns(prices: &[f64]) -> Result<Vec<f64>> {
    check_prices(prices, 2)?;
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

/// A contiguous slice of a price series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceWindow<'a> {
    pub offset: usize,
    pub prices: &'a [f64],
}

/// Windows of `w` consecutive prices starting every `stride` steps.
///
/// A window longer than the series yields nothing.
pub fn windows(prices: &[f64], w: usize, stride: usize) -> Result<Vec<PriceWindow<'_>>> {
    if w < 2 {
        return Err(invalid_input(format!("window size {w} < 2")));
    }
    if stride == 0 {
        return Err(invalid_input("stride must be positive"));
    }
    if w > prices.len() {
        return Ok(Vec::new());
    }
    Ok((0..=prices.len() - w)
        .step_by(stride)
        .map(|offset| PriceWindow {
            offset,
            prices: &prices[offset..offset + w],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    /// `values[k]` is the autocorrelation at lag `k`.
    pub values: Vec<f64>,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Sample autocorrelation for lags `0..=max_lag`.
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Result<AcfResult> {
    if xs.len() <= max_lag {
        return Err(invalid_input(format!(
            "series length {} must exceed max lag {max_lag}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(invalid_input("non-finite value in series"));
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 0.0 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    values.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = centered.iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
        values.push(num / denom);
    }
    Ok(AcfResult { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use Sign::{Down, Up};

    #[test]
    fn diff_signs_examples() {
        assert_eq!(diff_signs(&[1.0, 2.0, 3.0]).unwrap().signs, vec![Up, Up]);
        assert_eq!(diff_signs(&[5.0, 5.0, 5.0]).unwrap().signs, vec![Down, Down]);
        assert_eq!(
            diff_signs(&[3.0, 1.0, 4.0, 4.0]).unwrap().signs,
            vec![Down, Up, Down]
        );
        assert!(matches!(diff_signs(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(diff_signs(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn simple_returns_examples() {
        let r = simple_returns(&[100.0, 110.0]).unwrap();
        assert!((r[0] - 0.10).abs() < 1e-12);
        assert_eq!(simple_returns(&[100.0, 100.0]).unwrap(), vec![0.0]);
        let r = simple_returns(&[100.0, 90.0, 99.0]).unwrap();
        assert!((r[0] + 0.10).abs() < 1e-12 && (r[1] - 0.10).abs() < 1e-12);
        assert!(simple_returns(&[100.0, 0.0]).is_err());
    }

    #[test]
    fn window_counts() {
        let p: Vec<f64> = (1..=25).map(f64::from).collect();
        assert_eq!(windows(&p, 20, 1).unwrap().len(), 6);
        assert_eq!(windows(&p[..20], 20, 1).unwrap().len(), 1);
        assert_eq!(windows(&p[..19], 20, 1).unwrap().len(), 0);
        let ws = windows(&p, 20, 1).unwrap();
        assert_eq!(ws[5].offset, 5);
        assert_eq!(ws[5].prices.len(), 20);
        assert_eq!(windows(&p, 5, 10).unwrap().len(), 3);
        assert!(windows(&p, 1, 1).is_err());
    }

    fn naive_acf(xs: &[f64], k: usize) -> f64 {
        let n = xs.len();
        let mut mean = 0.0;
        for x in xs {
            mean += x;
        }
        mean /= n as f64;
        let mut num = 0.0;
        for t in 0..n - k {
            num += (xs[t] - mean) * (xs[t + k] - mean);
        }
        let mut den = 0.0;
        for t in 0..n {
            den += (xs[t] - mean) * (xs[t] - mean);
        }
        num / den
    }

    #[test]
    fn acf_lag_zero_and_alternating() {
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let acf = autocorrelation(&alt, 3).unwrap();
        assert_eq!(acf.values[0], 1.0);
        assert!((acf.values[1] + 1.0).abs() < 0.01);
        assert!(matches!(
            autocorrelation(&[3.0; 10], 2),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn acf_white_noise_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let acf = autocorrelation(&xs, 20).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        for k in 1..=20 {
            assert!(acf.values[k].abs() < bound, "lag {k}: {}", acf.values[k]);
        }
    }

    proptest! {
        #[test]
        fn diff_signs_length(prices in prop::collection::vec(0.01f64..1e4, 2..200)) {
            prop_assert_eq!(diff_signs(&prices).unwrap().len(), prices.len() - 1);
        }

        #[test]
        fn returns_round_trip(prices in prop::collection::vec(0.01f64..1e4, 2..200)) {
            let r = simple_returns(&prices).unwrap();
            let mut p = prices[0];
            for (ri, expected) in r.iter().zip(&prices[1..]) {
                p *= 1.0 + ri;
                prop_assert!(((p - expected) / expected).abs() < 1e-12);
            }
        }

        #[test]
        fn acf_matches_naive(xs in prop::collection::vec(-100.0f64..100.0, 30..2000)) {
            let k = 20.min(xs.len() - 1);
            let acf = autocorrelation(&xs, k).unwrap();
            for lag in 0..=k {
                prop_assert!((acf.values[lag] - naive_acf(&xs, lag)).abs() < 1e-10);
            }
        }
    }
}
