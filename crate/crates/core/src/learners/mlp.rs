use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::{window_features, FeatureMatrix, Scaling};
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::rng;

pub const MLP_SCHEMA: &str = "mlp-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    /// Hidden layer widths; empty gives softmax regression.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            lr: 0.005,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Fully connected layer; `w` is `n_out × n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.n_out).map(|o| {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            self.b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }));
    }
}

/// ReLU hidden layers and a two-way softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpModel {
    pub schema: String,
    pub scaling: Scaling,
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Dense>,
    pub config: MlpConfig,
}

/// Gradients laid out like the layers: `(dW, db)` per layer.
pub type Grads = Vec<(Vec<f64>, Vec<f64>)>;

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

impl MlpModel {
    /// He-initialised network of the given sizes (input first, 2 outputs last).
    pub fn init(n_inputs: usize, scaling: Scaling, config: &MlpConfig) -> Result<Self> {
        if n_inputs == 0 || config.hidden.iter().any(|&h| h == 0) {
            return Err(invalid_config("layer widths must be >= 1"));
        }
        let mut sizes = vec![n_inputs];
        sizes.extend(&config.hidden);
        sizes.push(2);
        let mut r = rng::stream(config.seed, rng::INIT, 0);
        let layers = sizes
            .windows(2)
            .map(|s| {
                let normal = Normal::new(0.0, (2.0 / s[0] as f64).sqrt()).expect("positive spread");
                Dense {
                    n_in: s[0],
                    n_out: s[1],
                    w: (0..s[0] * s[1]).map(|_| normal.sample(&mut r)).collect(),
                    b: vec![0.0; s[1]],
                }
            })
            .collect();
        Ok(Self {
            schema: MLP_SCHEMA.into(),
            scaling,
            layer_sizes: sizes,
            layers,
            config: config.clone(),
        })
    }

    fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Pre-activations of every layer for one input.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&a, &mut z);
            if l + 1 < self.layers.len() {
                a = z.iter().map(|v| v.max(0.0)).collect();
            }
            zs.push(z);
        }
        zs
    }

    pub fn positive_probability(&self, x: &[f64]) -> f64 {
        let zs = self.forward(x);
        log_softmax(zs.last().expect("at least one layer"))[1].exp()
    }

    pub fn score_window(&self, prices: &[f64]) -> Result<f64> {
        let x = window_features(prices, self.scaling)?;
        super::check_dims(x.len(), self.n_inputs())?;
        Ok(self.positive_probability(&x))
    }

    fn zero_grads(&self) -> Grads {
        self.layers
            .iter()
            .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
            .collect()
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[u8]) -> (f64, Grads) {
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let zs = self.forward(x);
            let logp = log_softmax(zs.last().expect("at least one layer"));
            loss -= logp[y as usize];
            let mut delta: Vec<f64> = logp.iter().map(|v| v.exp() * scale).collect();
            delta[y as usize] -= scale;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input: Vec<f64> = if l == 0 {
                    x.to_vec()
                } else {
                    zs[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let (gw, gb) = &mut grads[l];
                for o in 0..layer.n_out {
                    gb[o] += delta[o];
                    for i in 0..layer.n_in {
                        gw[o * layer.n_in + i] += delta[o] * input[i];
                    }
                }
                if l > 0 {
                    delta = (0..layer.n_in)
                        .map(|i| {
                            if zs[l - 1][i] > 0.0 {
                                (0..layer.n_out).map(|o| layer.w[o * layer.n_in + i] * delta[o]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (loss * scale, grads)
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[u8]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| -log_softmax(self.forward(x).last().expect("at least one layer"))[y as usize])
            .sum();
        total / xs.len() as f64
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

pub fn train_mlp(x: &FeatureMatrix, scaling: Scaling, config: &MlpConfig) -> Result<MlpModel> {
    if !(config.lr > 0.0 && config.lr.is_finite()) || config.batch_size == 0 {
        return Err(invalid_config(format!(
            "mlp lr {} / batch size {}",
            config.lr, config.batch_size
        )));
    }
    if !x.has_both_classes() {
        return Err(Error::Training("MLP needs both classes".into()));
    }
    let mut model = MlpModel::init(x.n_cols, scaling, config)?;
    let mut order: Vec<usize> = (0..x.n_rows).collect();
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, rng::TRAIN, epoch as u64));
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| x.row(i)).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| x.labels[i]).collect();
            let (loss, grads) = model.loss_and_grad(&xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("MLP loss non-finite in epoch {epoch}")));
            }
            for (layer, (gw, gb)) in model.layers.iter_mut().zip(&grads) {
                layer.w.iter_mut().zip(gw).for_each(|(p, g)| *p -= config.lr * g);
                layer.b.iter_mut().zip(gb).for_each(|(p, g)| *p -= config.lr * g);
            }
        }
        if !model.is_finite() {
            return Err(Error::Diverged(format!("MLP weights non-finite after epoch {epoch}")));
        }
    }
    Ok(model)
}

/// Largest `|analytic − numeric| / max(|analytic| + |numeric|, 1e−6)` over
/// every parameter, with central differences of step `eps`.
pub fn gradient_check(model: &MlpModel, xs: &[&[f64]], ys: &[u8], eps: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(invalid_input(format!("eps {eps} outside [1e-6, 1e-3]")));
    }
    let (_, grads) = model.loss_and_grad(xs, ys);
    let analytic: Vec<f64> = grads
        .iter()
        .flat_map(|(gw, gb)| gw.iter().chain(gb).copied())
        .collect();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *probe.params_mut().nth(k).expect("parameter index");
        *probe.params_mut().nth(k).expect("parameter index") = orig + eps;
        let up = probe.loss(xs, ys);
        *probe.params_mut().nth(k).expect("parameter index") = orig - eps;
        let down = probe.loss(xs, ys);
        *probe.params_mut().nth(k).expect("parameter index") = orig;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn batch(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut r = rng::stream(seed, rng::TRAIN, 7);
        let xs = (0..n).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let ys = (0..n).map(|i| (i % 2) as u8).collect();
        (xs, ys)
    }

    #[test]
    fn fresh_network_passes_gradient_check() {
        let m = MlpModel::init(19, Scaling::Zscore, &MlpConfig { seed: 1, ..MlpConfig::default() }).unwrap();
        let (xs, ys) = batch(8, 19, 1);
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        assert!(gradient_check(&m, &refs, &ys, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn linear_network_passes_tighter_check() {
        let cfg = MlpConfig { hidden: vec![], seed: 2, ..MlpConfig::default() };
        let m = MlpModel::init(19, Scaling::Zscore, &cfg).unwrap();
        assert_eq!(m.layer_sizes, vec![19, 2]);
        let (xs, ys) = batch(8, 19, 2);
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        assert!(gradient_check(&m, &refs, &ys, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn zero_inputs_give_zero_first_layer_gradient() {
        let m = MlpModel::init(19, Scaling::Zscore, &MlpConfig::default()).unwrap();
        let zero = vec![0.0; 19];
        let xs: Vec<&[f64]> = vec![&zero; 4];
        let (_, grads) = m.loss_and_grad(&xs, &[0, 1, 1, 0]);
        assert!(grads[0].0.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn learns_xor() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let x = FeatureMatrix::new(rows, vec![0, 1, 1, 0]).unwrap();
        let cfg = MlpConfig { hidden: vec![8], lr: 0.1, epochs: 5000, batch_size: 4, seed: 3 };
        let m = train_mlp(&x, Scaling::Raw, &cfg).unwrap();
        for i in 0..4 {
            assert_eq!(m.positive_probability(x.row(i)) > 0.5, x.labels[i] == 1);
        }
    }

    #[test]
    fn zero_epochs_returns_the_initial_network() {
        let (xs, ys) = batch(40, 3, 4);
        let x = FeatureMatrix::new(xs, ys).unwrap();
        let cfg = MlpConfig { epochs: 0, seed: 9, ..MlpConfig::default() };
        assert_eq!(train_mlp(&x, Scaling::Raw, &cfg).unwrap(), MlpModel::init(3, Scaling::Raw, &cfg).unwrap());
    }

    #[test]
    fn runaway_learning_rate_diverges() {
        let (xs, ys) = batch(64, 3, 5);
        let xs = xs.into_iter().map(|r| r.into_iter().map(|v| v * 1e150).collect()).collect();
        let x = FeatureMatrix::new(xs, ys).unwrap();
        let cfg = MlpConfig { lr: 1e100, epochs: 5, ..MlpConfig::default() };
        assert!(matches!(train_mlp(&x, Scaling::Raw, &cfg), Err(Error::Diverged(_))));
    }

    #[test]
    fn training_is_deterministic_and_serialisable() {
        let (xs, ys) = batch(100, 4, 6);
        let x = FeatureMatrix::new(xs, ys).unwrap();
        let cfg = MlpConfig { epochs: 3, seed: 4, ..MlpConfig::default() };
        let a = train_mlp(&x, Scaling::Raw, &cfg).unwrap();
        assert_eq!(a, train_mlp(&x, Scaling::Raw, &cfg).unwrap());
        let back: MlpModel = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
