use ndarray::{Array1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Hidden-unit counts swept by the experiments.
pub const HIDDEN_UNIT_CHOICES: [usize; 4] = [2, 4, 8, 16];

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Number of hidden layers.
    pub depth: usize,
    /// Units in every hidden layer.
    pub hidden_units: usize,
    pub input_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl MlpConfig {
    /// A config with the default training schedule (300 epochs, lr 0.001,
    /// batches of 32).
    pub fn new(input_dim: usize, depth: usize, hidden_units: usize, seed: u64) -> Self {
        MlpConfig {
            depth,
            hidden_units,
            input_dim,
            learning_rate: 0.001,
            epochs: 300,
            batch_size: 32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::param("depth", "must be at least 1"));
        }
        if self.hidden_units == 0 {
            return Err(Error::param("hidden_units", "must be at least 1"));
        }
        if self.input_dim == 0 {
            return Err(Error::param("input_dim", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive and finite"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Location of one dense layer inside the flat parameter vector.
///
/// Weights are stored row-major with shape `(inputs, outputs)`, followed by
/// `outputs` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }

    fn len(&self) -> usize {
        (self.inputs + 1) * self.outputs
    }
}

/// A dense feed-forward binary classifier: rectifier hidden layers and a
/// single logistic output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Per-row activations reused across rows.
#[derive(Debug, Clone)]
pub struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: [Vec<f64>; 2],
}

impl MlpModel {
    /// Fan-based uniform initialisation, `U(-a, a)` with
    /// `a = sqrt(6 / (fan_in + fan_out))`, and zero biases.
    pub fn init(cfg: &MlpConfig) -> Result<Self> {
        cfg.validate()?;
        let mut model = Self::zeros(cfg.input_dim, cfg.depth, cfg.hidden_units);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for layer in model.layers.clone() {
            let a = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut model.params[layer.weight_range()] {
                *w = rng.random_range(-a..a);
            }
        }
        Ok(model)
    }

    /// A model with every parameter zero.
    pub fn zeros(input_dim: usize, depth: usize, hidden_units: usize) -> Self {
        let mut layers = Vec::with_capacity(depth + 1);
        let mut offset = 0;
        let mut inputs = input_dim;
        for l in 0..=depth {
            let outputs = if l == depth { 1 } else { hidden_units };
            let shape = LayerShape {
                inputs,
                outputs,
                offset,
            };
            offset += shape.len();
            layers.push(shape);
            inputs = outputs;
        }
        MlpModel {
            layers,
            params: vec![0.0; offset],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    /// `(inputs, outputs)` of every weight matrix.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].weight_range()]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].bias_range()]
    }

    /// All parameters, layer by layer (weights then biases).
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn scratch(&self) -> Scratch {
        let widest = self
            .layers
            .iter()
            .map(|l| l.inputs.max(l.outputs))
            .max()
            .unwrap_or(1);
        Scratch {
            acts: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            deltas: [vec![0.0; widest], vec![0.0; widest]],
        }
    }

    /// Output logit for one row; leaves per-layer activations in `scratch`.
    pub(crate) fn logit_row(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.acts.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &done[l - 1] };
            let out = &mut rest[0];
            let w = &self.params[layer.weight_range()];
            out.copy_from_slice(&self.params[layer.bias_range()]);
            for (i, &xi) in input.iter().enumerate() {
                let row = &w[i * layer.outputs..(i + 1) * layer.outputs];
                for (o, &wij) in out.iter_mut().zip(row) {
                    *o += xi * wij;
                }
            }
            if l != last {
                for o in out.iter_mut() {
                    // max(0, z); the subgradient at 0 is taken as 0 in backprop
                    if *o < 0.0 {
                        *o = 0.0;
                    }
                }
            }
        }
        scratch.acts[last][0]
    }

    /// Adds the gradient of `dlogit * logit(x)` to `grads`; must follow
    /// [`Self::logit_row`] on the same row and scratch.
    pub(crate) fn backprop_row(
        &self,
        x: &[f64],
        dlogit: f64,
        scratch: &mut Scratch,
        grads: &mut [f64],
    ) {
        let [delta, prev] = &mut scratch.deltas;
        delta[0] = dlogit;
        for l in (0..self.layers.len()).rev() {
            let layer = self.layers[l];
            let input: &[f64] = if l == 0 { x } else { &scratch.acts[l - 1] };
            let d = &delta[..layer.outputs];
            let w = &self.params[layer.weight_range()];
            {
                let (gw, gb) = grads[layer.offset..layer.offset + layer.len()]
                    .split_at_mut(layer.inputs * layer.outputs);
                for (g, &dj) in gb.iter_mut().zip(d) {
                    *g += dj;
                }
                for (i, &xi) in input.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &mut gw[i * layer.outputs..(i + 1) * layer.outputs];
                    for (g, &dj) in row.iter_mut().zip(d) {
                        *g += xi * dj;
                    }
                }
            }
            if l > 0 {
                for (i, p) in prev[..layer.inputs].iter_mut().enumerate() {
                    *p = if input[i] > 0.0 {
                        let row = &w[i * layer.outputs..(i + 1) * layer.outputs];
                        row.iter().zip(d).map(|(a, b)| a * b).sum()
                    } else {
                        0.0
                    };
                }
                std::mem::swap(delta, prev);
            }
        }
    }

    fn check_dim(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    /// Calls `f(row_index, row)` for each row as a contiguous slice.
    fn for_each_row(x: &ArrayView2<'_, f64>, mut f: impl FnMut(usize, &[f64])) {
        let mut buf = vec![0.0; x.ncols()];
        for (i, row) in x.rows().into_iter().enumerate() {
            match row.as_slice() {
                Some(s) => f(i, s),
                None => {
                    for (b, v) in buf.iter_mut().zip(row.iter()) {
                        *b = *v;
                    }
                    f(i, &buf)
                }
            }
        }
    }

    /// Class-1 probability for every row, clamped into `(0, 1)`.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_dim(x.ncols())?;
        let mut scratch = self.scratch();
        let mut out = Array1::zeros(x.nrows());
        Self::for_each_row(&x, |i, row| {
            out[i] = clamp_prob(sigmoid(self.logit_row(row, &mut scratch)));
        });
        Ok(out)
    }

    /// Labels: 1 iff the probability is at least `threshold`.
    pub fn predict(&self, x: ArrayView2<'_, f64>, threshold: f64) -> Result<Vec<u8>> {
        Ok(self
            .forward(x)?
            .iter()
            .map(|&p| u8::from(p >= threshold))
            .collect())
    }

    /// Mean binary cross-entropy over the batch and its exact gradient with
    /// respect to [`Self::params`].
    pub fn loss_and_grads(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x.ncols())?;
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.nrows(),
                right: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidLabel(bad as u64));
        }
        let mut grads = vec![0.0; self.n_params()];
        let mut scratch = self.scratch();
        let mut total = 0.0;
        Self::for_each_row(&x, |i, row| {
            total += self.accumulate_row(row, y[i], &mut scratch, &mut grads);
        });
        let n = y.len().max(1) as f64;
        for g in &mut grads {
            *g /= n;
        }
        Ok((total / n, grads))
    }

    /// Which rectifiers are active (pre-activation > 0), row by row.
    pub fn activation_pattern(&self, x: ArrayView2<'_, f64>) -> Result<Vec<bool>> {
        self.check_dim(x.ncols())?;
        let mut scratch = self.scratch();
        let hidden = self.depth();
        let mut pattern = Vec::new();
        Self::for_each_row(&x, |_, row| {
            self.logit_row(row, &mut scratch);
            for acts in &scratch.acts[..hidden] {
                pattern.extend(acts.iter().map(|&a| a > 0.0));
            }
        });
        Ok(pattern)
    }

    /// Per-row clamped cross-entropy.
    pub fn row_losses(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<Vec<f64>> {
        self.check_dim(x.ncols())?;
        let mut scratch = self.scratch();
        let mut out = vec![0.0; x.nrows()];
        Self::for_each_row(&x, |i, row| {
            out[i] = bce(self.logit_row(row, &mut scratch), y[i]).0;
        });
        Ok(out)
    }

    /// Mean loss only.
    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64> {
        self.check_dim(x.ncols())?;
        let mut scratch = self.scratch();
        let mut total = 0.0;
        Self::for_each_row(&x, |i, row| {
            total += bce(self.logit_row(row, &mut scratch), y[i]).0;
        });
        Ok(total / y.len().max(1) as f64)
    }

    /// Forward and backward for one row; returns its (unscaled) loss and adds
    /// its gradient to `grads`.
    pub(crate) fn accumulate_row(
        &self,
        x: &[f64],
        y: u8,
        scratch: &mut Scratch,
        grads: &mut [f64],
    ) -> f64 {
        let z = self.logit_row(x, scratch);
        let (loss, dlogit) = bce(z, y);
        if dlogit != 0.0 {
            self.backprop_row(x, dlogit, scratch, grads);
        }
        loss
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Clamped cross-entropy of a logit and its derivative with respect to the logit.
///
/// Inside the clamp the loss is `softplus(-z)` or `softplus(z)` and the
/// derivative `p - y`; where the probability is clamped the loss is flat.
pub(crate) fn bce(z: f64, y: u8) -> (f64, f64) {
    let p = sigmoid(z);
    if p <= PROB_CLAMP || p >= 1.0 - PROB_CLAMP {
        let pc = clamp_prob(p);
        let loss = if y == 1 { -pc.ln() } else { -(1.0 - pc).ln() };
        return (loss, 0.0);
    }
    if y == 1 {
        (softplus(-z), p - 1.0)
    } else {
        (softplus(z), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn cfg(depth: usize, hu: usize, dim: usize) -> MlpConfig {
        MlpConfig::new(dim, depth, hu, 42)
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = MlpModel::init(&cfg(3, 8, 2)).unwrap();
        let b = MlpModel::init(&cfg(3, 8, 2)).unwrap();
        assert_eq!(a, b);
        for l in 0..a.layers().len() {
            assert!(a.biases(l).iter().all(|&v| v == 0.0));
            let shape = a.layers()[l];
            let bound = (6.0 / (shape.inputs + shape.outputs) as f64).sqrt();
            assert!(a.weights(l).iter().all(|w| w.abs() < bound));
        }
    }

    #[test]
    fn deepest_architecture_shapes() {
        let m = MlpModel::init(&cfg(5, 16, 1)).unwrap();
        assert_eq!(
            m.weight_shapes(),
            vec![(1, 16), (16, 16), (16, 16), (16, 16), (16, 16), (16, 1)]
        );
        assert_eq!(m.n_params(), 32 + 4 * 272 + 17);
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = MlpModel::zeros(3, 2, 4);
        let x = array![[1.0, -2.0, 3.0], [0.0, 0.0, 0.0]];
        assert_eq!(m.forward(x.view()).unwrap(), array![0.5, 0.5]);
        let (loss, grads) = m.loss_and_grads(x.view(), &[1, 0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        // hidden activations are zero, so only the output bias moves
        let out = m.layers()[2];
        for (i, g) in grads.iter().enumerate() {
            if i != out.bias_range().start {
                assert_eq!(*g, 0.0);
            }
        }
    }

    #[test]
    fn rows_are_independent() {
        let m = MlpModel::init(&cfg(2, 8, 2)).unwrap();
        let batch = array![[0.3, -1.0], [2.0, 0.5], [-0.7, 0.1]];
        let all = m.forward(batch.view()).unwrap();
        let one = m.forward(batch.slice(ndarray::s![1..2, ..])).unwrap();
        assert_eq!(one[0], all[1]);
        // column-major input takes the copying path
        let fortran = batch.t().to_owned().reversed_axes();
        assert_eq!(m.forward(fortran.view()).unwrap(), all);
    }

    #[test]
    fn huge_inputs_stay_inside_unit_interval() {
        let m = MlpModel::init(&cfg(3, 16, 5)).unwrap();
        let x = Array2::from_shape_fn((50, 5), |(i, j)| {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * 1e6 * (1.0 + (i * 5 + j) as f64 / 100.0)
        });
        let p = m.forward(x.view()).unwrap();
        assert!(p.iter().all(|&v| v.is_finite() && v > 0.0 && v < 1.0));
        let loss = m.loss(x.view(), &[1; 50]).unwrap();
        assert!(loss.is_finite());
    }

    #[test]
    fn duplicated_batch_has_same_loss_and_grads() {
        let m = MlpModel::init(&cfg(2, 4, 2)).unwrap();
        let x = array![[0.1, 0.9], [0.8, -0.3], [1.5, 0.2]];
        let y = [1, 0, 1];
        let x2 = ndarray::concatenate(ndarray::Axis(0), &[x.view(), x.view()]).unwrap();
        let y2 = [1, 0, 1, 1, 0, 1];
        let (l1, g1) = m.loss_and_grads(x.view(), &y).unwrap();
        let (l2, g2) = m.loss_and_grads(x2.view(), &y2).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_and_label_errors() {
        let m = MlpModel::zeros(2, 1, 2);
        let x = array![[1.0, 2.0, 3.0]];
        assert!(matches!(
            m.forward(x.view()),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
        assert!(m.predict(x.view(), 0.5).is_err());
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            m.loss_and_grads(x.view(), &[2]),
            Err(Error::InvalidLabel(2))
        ));
        assert!(matches!(
            m.loss_and_grads(x.view(), &[1, 0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn predict_threshold_convention() {
        let m = MlpModel::zeros(1, 1, 2);
        let x = array![[0.0], [5.0]];
        assert_eq!(m.predict(x.view(), 0.5).unwrap(), vec![1, 1]);
        assert_eq!(m.predict(x.view(), 1.0).unwrap(), vec![0, 0]);

        // output bias ln 9 gives p = 0.9 everywhere
        let mut m = MlpModel::zeros(1, 1, 2);
        let out = m.layers()[1].bias_range().start;
        m.params_mut()[out] = 9f64.ln();
        let p = m.forward(x.view()).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-12);
        assert_eq!(m.predict(x.view(), 0.5).unwrap(), vec![1, 1]);
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(1, 2, 1);
        c.learning_rate = 0.0;
        assert!(MlpModel::init(&c).is_err());
        assert!(MlpModel::init(&cfg(0, 2, 1)).is_err());
        assert!(MlpModel::init(&cfg(1, 0, 1)).is_err());
        let mut c = cfg(1, 2, 1);
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn bce_matches_clamped_formula() {
        for &z in &[-30.0, -5.0, -0.1, 0.0, 0.7, 12.0, 40.0] {
            for y in [0u8, 1] {
                let p = clamp_prob(sigmoid(z));
                let direct = if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
                let (loss, _) = bce(z, y);
                assert!(
                    (loss - direct).abs() < 1e-9 * direct.max(1.0),
                    "z={z} y={y}"
                );
            }
        }
        assert_eq!(bce(-40.0, 1).1, 0.0);
    }
}
