//! Dense feed-forward baseline network.
//!
//! The comparison architecture is `[2d, 50, 50, 2d]` with sigmoid hidden
//! layers and an identity output layer. Its training objective is
//! `MSE_d + w * MSE_s`, where the optional penalty
//!
//! ```text
//! MSE_s = (1/N) sum_i | Jac(x_i)^T J Jac(x_i) - J |_F^2
//! ```
//!
//! measures how far the network is from being symplectic. The experiments
//! train with `w = 0`, so the penalty path is deliberately simple: its
//! parameter gradient is computed by central finite differences, and with
//! `w = 0` no Jacobian is ever evaluated (observable through a call
//! counter).

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::model::{Batch, ModelKind, PhaseMap, TrainableModel};
use crate::phase::SymplecticForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerActivation {
    Sigmoid,
    Identity,
}

impl LayerActivation {
    /// sigma'(x) expressed through the cached activation a = sigma(x).
    #[inline]
    fn deriv_from_value(self, a: f64) -> f64 {
        match self {
            LayerActivation::Sigmoid => a * (1.0 - a),
            LayerActivation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// out x in.
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: LayerActivation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: LayerActivation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.nrows(),
                actual: bias.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::invalid("dense layer must have nonzero size"));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn activation(&self) -> LayerActivation {
        self.activation
    }

    /// a = act(x W^T + b) for a row-major slab of inputs.
    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t()) + &self.bias;
        if self.activation == LayerActivation::Sigmoid {
            z.mapv_inplace(sigmoid);
        }
        z
    }
}

/// Reusable slabs for the training pass. Contents are meaningless between
/// calls; shapes track the last (batch, architecture) pair seen.
#[derive(Debug, Default)]
struct Scratch {
    /// Per-layer activations, shape `(n, out_dim(l))`.
    acts: Vec<Array2<f64>>,
    /// Per-layer loss derivatives, same shapes.
    deltas: Vec<Array2<f64>>,
}

impl Scratch {
    fn ensure(&mut self, n: usize, layers: &[DenseLayer]) {
        let fits = self.acts.len() == layers.len()
            && self
                .acts
                .iter()
                .zip(layers)
                .all(|(a, l)| a.dim() == (n, l.out_dim()));
        if !fits {
            self.acts = layers
                .iter()
                .map(|l| Array2::zeros((n, l.out_dim())))
                .collect();
            self.deltas = layers
                .iter()
                .map(|l| Array2::zeros((n, l.out_dim())))
                .collect();
        }
    }
}

#[derive(Debug)]
pub struct Fnn {
    d: usize,
    layers: Vec<DenseLayer>,
    /// Counts every input-Jacobian evaluation (pointwise or per batch
    /// sample); lets tests assert that w = 0 training does no Jacobian work.
    jacobian_calls: AtomicU64,
    scratch: Scratch,
}

impl Clone for Fnn {
    fn clone(&self) -> Self {
        Self {
            d: self.d,
            layers: self.layers.clone(),
            jacobian_calls: AtomicU64::new(self.jacobian_calls.load(Ordering::Relaxed)),
            scratch: Scratch::default(),
        }
    }
}

impl PartialEq for Fnn {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.layers == other.layers
    }
}

impl Fnn {
    /// Builds `[2d, hidden..., 2d]` with sigmoid hidden layers, an identity
    /// output layer, and uniform init on +-sqrt(6 / (fan_in + fan_out)).
    pub fn new(d: usize, hidden: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("fnn needs d >= 1"));
        }
        let mut sizes = vec![2 * d];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * d);
        if sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.random_range(-limit..=limit)
            });
            let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-limit..=limit));
            let activation = if l + 2 == sizes.len() {
                LayerActivation::Identity
            } else {
                LayerActivation::Sigmoid
            };
            layers.push(DenseLayer::new(weights, bias, activation)?);
        }
        Self::from_layers(d, layers)
    }

    /// The standard baseline shape `[2d, 50, 50, 2d]`.
    pub fn baseline(d: usize, rng: &mut impl Rng) -> Result<Self> {
        Self::new(d, &[50, 50], rng)
    }

    pub fn from_layers(d: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("fnn needs d >= 1"));
        }
        if layers.is_empty() {
            return Err(Error::invalid("fnn needs at least one layer"));
        }
        if layers[0].in_dim() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                actual: layers[0].in_dim(),
            });
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].out_dim(),
                    actual: pair[1].in_dim(),
                });
            }
        }
        if layers.last().expect("non-empty").out_dim() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                actual: layers.last().expect("non-empty").out_dim(),
            });
        }
        for layer in &layers {
            if layer.weights.iter().chain(layer.bias.iter()).any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("layer parameter".to_string()));
            }
        }
        Ok(Self {
            d,
            layers,
            jacobian_calls: AtomicU64::new(0),
            scratch: Scratch::default(),
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Total input-Jacobian evaluations so far.
    pub fn jacobian_calls(&self) -> u64 {
        self.jacobian_calls.load(Ordering::Relaxed)
    }

    /// Forward pass over a slab, returning every layer's activation
    /// (`out[0]` is the input itself).
    fn forward_all(&self, x: Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    fn batch_input(&self, batch: &Batch) -> Result<Array2<f64>> {
        if batch.dof() != self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: batch.dim(),
            });
        }
        Ok(Array2::from_shape_vec((batch.len(), 2 * self.d), batch.xs().to_vec())
            .expect("batch slab is rectangular"))
    }

    fn mse_from_output(out: &Array2<f64>, ys: &[f64]) -> f64 {
        let n = out.nrows();
        let mut total = 0.0;
        for (a, b) in out.iter().zip(ys) {
            let r = a - b;
            total += r * r;
        }
        total / n as f64
    }

    /// Input Jacobian of the network at the sample `row` of cached
    /// activations, flattened row-major 2d x 2d. Counted.
    fn jacobian_from_acts(&self, acts: &[Array2<f64>], row: usize) -> Vec<f64> {
        self.jacobian_calls.fetch_add(1, Ordering::Relaxed);
        let w = 2 * self.d;
        // v: cur_dim x 2d, starts as the identity.
        let mut v = vec![0.0; w * w];
        for i in 0..w {
            v[i * w + i] = 1.0;
        }
        let mut cur_rows = w;
        for (l, layer) in self.layers.iter().enumerate() {
            let out_dim = layer.out_dim();
            let wm = &layer.weights;
            let mut next = vec![0.0; out_dim * w];
            for i in 0..out_dim {
                for col in 0..w {
                    let mut acc = 0.0;
                    for j in 0..cur_rows {
                        acc += wm[[i, j]] * v[j * w + col];
                    }
                    next[i * w + col] = acc;
                }
            }
            if layer.activation == LayerActivation::Sigmoid {
                let a = &acts[l + 1];
                for i in 0..out_dim {
                    let s = layer.activation.deriv_from_value(a[[row, i]]);
                    for col in 0..w {
                        next[i * w + col] *= s;
                    }
                }
            }
            v = next;
            cur_rows = out_dim;
        }
        v
    }

    /// Mean squared symplecticity residual over the batch inputs.
    pub fn symplecticity_mse(&self, batch: &Batch) -> Result<f64> {
        let x = self.batch_input(batch)?;
        let n = x.nrows();
        let acts = self.forward_all(x);
        let form = SymplecticForm::new(self.d);
        let mut total = 0.0;
        for r in 0..n {
            let jac = self.jacobian_from_acts(&acts, r);
            let res = form.residual(&jac);
            total += res * res;
        }
        Ok(total / n as f64)
    }

    /// JSON serialization of the architecture and parameters.
    pub fn to_json(&self) -> Result<String> {
        let file = FnnFile {
            schema_version: SCHEMA_VERSION,
            kind: ModelKind::Fnn.name().to_string(),
            d: self.d,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation,
                    weights: l
                        .weights
                        .rows()
                        .into_iter()
                        .map(|r| r.to_vec())
                        .collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FnnFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        if file.kind != ModelKind::Fnn.name() {
            return Err(Error::ModelFormat(format!(
                "expected kind \"fnn\", got {:?}",
                file.kind
            )));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for layer in file.layers {
            let out = layer.weights.len();
            let inp = layer.weights.first().map_or(0, |r| r.len());
            if layer.weights.iter().any(|r| r.len() != inp) {
                return Err(Error::ModelFormat("ragged weight matrix".to_string()));
            }
            let flat: Vec<f64> = layer.weights.into_iter().flatten().collect();
            let weights = Array2::from_shape_vec((out, inp), flat)
                .map_err(|e| Error::ModelFormat(e.to_string()))?;
            layers.push(DenseLayer::new(
                weights,
                Array1::from_vec(layer.bias),
                layer.activation,
            )?);
        }
        Self::from_layers(file.d, layers).map_err(|e| Error::ModelFormat(format!("bad network: {e}")))
    }
}

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FnnFile {
    schema_version: u32,
    kind: String,
    d: usize,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    activation: LayerActivation,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl PhaseMap for Fnn {
    fn dof(&self) -> usize {
        self.d
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 2 * self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: x.len(),
            });
        }
        let input = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("shape");
        let acts = self.forward_all(input);
        let out = acts.last().expect("non-empty");
        let v: Vec<f64> = out.iter().copied().collect();
        if let Some(c) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("network output {c}")));
        }
        Ok(v)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 2 * self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: x.len(),
            });
        }
        let input = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("shape");
        let acts = self.forward_all(input);
        Ok(self.jacobian_from_acts(&acts, 0))
    }
}

impl TrainableModel for Fnn {
    fn kind(&self) -> ModelKind {
        ModelKind::Fnn
    }

    fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.weights.iter().copied());
            out.extend(layer.bias.iter().copied());
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        if let Some(c) = params.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {c}")));
        }
        let mut pos = 0;
        for layer in &mut self.layers {
            let wlen = layer.weights.len();
            layer
                .weights
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&params[pos..pos + wlen]);
            pos += wlen;
            let blen = layer.bias.len();
            layer
                .bias
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&params[pos..pos + blen]);
            pos += blen;
        }
        debug_assert_eq!(pos, params.len());
        Ok(())
    }

    fn loss(&self, batch: &Batch, w_penalty: f64) -> Result<f64> {
        let x = self.batch_input(batch)?;
        let acts = self.forward_all(x);
        let mut loss = Self::mse_from_output(acts.last().expect("non-empty"), batch.ys());
        if w_penalty > 0.0 {
            loss += w_penalty * self.symplecticity_mse(batch)?;
        }
        Ok(loss)
    }

    /// Prediction-error gradients are exact analytic backprop; the penalty
    /// term (only when `w_penalty > 0`) adds central finite differences over
    /// the parameters, which is slow and documented as such.
    fn loss_and_grad(&mut self, batch: &Batch, w_penalty: f64) -> Result<(f64, Vec<f64>)> {
        if batch.dof() != self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: batch.dim(),
            });
        }
        let n = batch.len();
        let width = 2 * self.d;
        let x = ArrayView2::from_shape((n, width), batch.xs()).expect("batch slab is rectangular");
        let layer_count = self.layers.len();
        self.scratch.ensure(n, &self.layers);

        // Forward, writing each activation slab in place.
        for l in 0..layer_count {
            let (done, todo) = self.scratch.acts.split_at_mut(l);
            let out = &mut todo[0];
            let layer = &self.layers[l];
            if l == 0 {
                general_mat_mul(1.0, &x, &layer.weights.t(), 0.0, out);
            } else {
                general_mat_mul(1.0, &done[l - 1], &layer.weights.t(), 0.0, out);
            }
            let bias = layer.bias.as_slice().expect("bias is contiguous");
            let slab = out.as_slice_mut().expect("activation slab is contiguous");
            match layer.activation {
                LayerActivation::Sigmoid => {
                    for row in slab.chunks_exact_mut(bias.len()) {
                        for (v, b) in row.iter_mut().zip(bias) {
                            *v = sigmoid(*v + b);
                        }
                    }
                }
                LayerActivation::Identity => {
                    for row in slab.chunks_exact_mut(bias.len()) {
                        for (v, b) in row.iter_mut().zip(bias) {
                            *v += b;
                        }
                    }
                }
            }
        }

        let mut loss =
            Self::mse_from_output(&self.scratch.acts[layer_count - 1], batch.ys());

        // d loss / d output.
        {
            let out = self.scratch.acts[layer_count - 1]
                .as_slice()
                .expect("contiguous");
            let delta = self.scratch.deltas[layer_count - 1]
                .as_slice_mut()
                .expect("contiguous");
            let scale = 2.0 / n as f64;
            for ((dv, a), b) in delta.iter_mut().zip(out).zip(batch.ys()) {
                *dv = (a - b) * scale;
            }
        }

        let mut grads = vec![0.0; self.param_count()];
        // Parameter offsets per layer (weights then bias).
        let mut offsets = Vec::with_capacity(layer_count);
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.weights.len() + layer.bias.len();
        }

        for l in (0..layer_count).rev() {
            let layer = &self.layers[l];
            let w_len = layer.weights.len();
            let b_len = layer.bias.len();
            {
                // Weight and bias gradients land straight in the output
                // vector; the slice starts zeroed.
                let block = &mut grads[offsets[l]..offsets[l] + w_len + b_len];
                let (gw_slice, gb_slice) = block.split_at_mut(w_len);
                let mut gw =
                    ArrayViewMut2::from_shape((layer.out_dim(), layer.in_dim()), gw_slice)
                        .expect("gradient block shape");
                let delta = &self.scratch.deltas[l];
                if l == 0 {
                    general_mat_mul(1.0, &delta.t(), &x, 0.0, &mut gw);
                } else {
                    general_mat_mul(1.0, &delta.t(), &self.scratch.acts[l - 1], 0.0, &mut gw);
                }
                for row in delta
                    .as_slice()
                    .expect("contiguous")
                    .chunks_exact(b_len)
                {
                    for (g, v) in gb_slice.iter_mut().zip(row) {
                        *g += v;
                    }
                }
            }
            if l > 0 {
                let (head, tail) = self.scratch.deltas.split_at_mut(l);
                let prev = &mut head[l - 1];
                general_mat_mul(1.0, &tail[0], &layer.weights, 0.0, prev);
                if self.layers[l - 1].activation == LayerActivation::Sigmoid {
                    let acts = self.scratch.acts[l - 1].as_slice().expect("contiguous");
                    let pv = prev.as_slice_mut().expect("contiguous");
                    for (p, a) in pv.iter_mut().zip(acts) {
                        *p *= a * (1.0 - a);
                    }
                }
            }
        }

        if w_penalty > 0.0 {
            loss += w_penalty * self.symplecticity_mse(batch)?;
            let params = self.params();
            let eps = 1e-6;
            let mut probe = self.clone();
            for idx in 0..params.len() {
                let mut p = params.clone();
                p[idx] += eps;
                probe.set_params(&p)?;
                let sp = probe.symplecticity_mse(batch)?;
                p[idx] = params[idx] - eps;
                probe.set_params(&p)?;
                let sm = probe.symplecticity_mse(batch)?;
                grads[idx] += w_penalty * (sp - sm) / (2.0 * eps);
            }
        }
        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_jacobian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn identity_layer(n: usize) -> DenseLayer {
        DenseLayer::new(
            Array2::eye(n),
            Array1::zeros(n),
            LayerActivation::Identity,
        )
        .unwrap()
    }

    #[test]
    fn baseline_shape_and_param_count() {
        let net = Fnn::baseline(1, &mut rng(0)).unwrap();
        assert_eq!(net.layers().len(), 3);
        assert_eq!(net.layers()[0].in_dim(), 2);
        assert_eq!(net.layers()[1].out_dim(), 50);
        assert_eq!(net.layers()[2].activation(), LayerActivation::Identity);
        // [2,50,50,2]: 2*50+50 + 50*50+50 + 50*2+2
        assert_eq!(net.param_count(), 150 + 2550 + 102);
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut net = Fnn::baseline(1, &mut rng(1)).unwrap();
        net.set_params(&vec![0.0; net.param_count()]).unwrap();
        let out = net.apply(&[0.4, -0.7]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_net_is_identity() {
        let net = Fnn::from_layers(1, vec![identity_layer(2)]).unwrap();
        assert_eq!(net.apply(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
        // Jacobian of a single identity-activation layer is its weights.
        let jac = net.jacobian(&[0.1, 0.2]).unwrap();
        assert_eq!(jac, vec![1.0, 0.0, 0.0, 1.0]);
        // Jacobian = I satisfies the symplectic condition exactly.
        let batch = Batch::new(1, vec![0.1, 0.2], vec![0.0, 0.0]).unwrap();
        assert_eq!(net.symplecticity_mse(&batch).unwrap(), 0.0);
    }

    #[test]
    fn init_respects_fan_bounds() {
        let net = Fnn::new(1, &[5, 5], &mut rng(2)).unwrap();
        for layer in net.layers() {
            let limit = (6.0 / (layer.in_dim() + layer.out_dim()) as f64).sqrt();
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                assert!(v.abs() <= limit);
            }
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let net = Fnn::new(1, &[5, 5], &mut rng(3)).unwrap();
        let mut r = rng(33);
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
            let analytic = net.jacobian(&x).unwrap();
            let fd = fd_jacobian(|z| net.apply(z), &x, 1e-5).unwrap();
            for (a, b) in analytic.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
        let net2 = Fnn::new(2, &[7], &mut rng(4)).unwrap();
        let x = [0.2, -0.3, 0.5, 0.1];
        let analytic = net2.jacobian(&x).unwrap();
        let fd = fd_jacobian(|z| net2.apply(z), &x, 1e-5).unwrap();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_sigmoid_flattens_jacobian() {
        let net = Fnn::new(1, &[5], &mut rng(5)).unwrap();
        let jac = net.jacobian(&[4000.0, 4000.0]).unwrap();
        for v in jac {
            assert!(v.abs() < 1e-10, "saturated jacobian entry {v}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut net = Fnn::new(1, &[5, 5], &mut rng(6)).unwrap();
        let mut r = rng(66);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..6)
            .map(|_| {
                (
                    (0..2).map(|_| r.random_range(-1.0..1.0)).collect(),
                    (0..2).map(|_| r.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let (_, grads) = net.loss_and_grad(&batch, 0.0).unwrap();
        let params = net.params();
        let eps = 1e-6;
        for (idx, g) in grads.iter().enumerate() {
            let mut plus = params.clone();
            plus[idx] += eps;
            net.set_params(&plus).unwrap();
            let lp = net.loss(&batch, 0.0).unwrap();
            let mut minus = params.clone();
            minus[idx] -= eps;
            net.set_params(&minus).unwrap();
            let lm = net.loss(&batch, 0.0).unwrap();
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-8);
            assert!(rel <= 1e-5, "param {idx}: analytic {g} vs fd {fd}");
        }
        net.set_params(&params).unwrap();
    }

    #[test]
    fn penalized_gradients_match_finite_differences() {
        let mut net = Fnn::new(1, &[4], &mut rng(7)).unwrap();
        let pairs = vec![
            (vec![0.2, -0.1], vec![0.15, -0.02]),
            (vec![-0.4, 0.3], vec![-0.35, 0.38]),
        ];
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let w = 0.5;
        let (_, grads) = net.loss_and_grad(&batch, w).unwrap();
        let params = net.params();
        let eps = 1e-6;
        for (idx, g) in grads.iter().enumerate() {
            let mut plus = params.clone();
            plus[idx] += eps;
            net.set_params(&plus).unwrap();
            let lp = net.loss(&batch, w).unwrap();
            let mut minus = params.clone();
            minus[idx] -= eps;
            net.set_params(&minus).unwrap();
            let lm = net.loss(&batch, w).unwrap();
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-8);
            assert!(rel <= 1e-4, "param {idx}: analytic {g} vs fd {fd}");
        }
        net.set_params(&params).unwrap();
    }

    #[test]
    fn perfect_fit_is_stationary() {
        let mut net = Fnn::new(1, &[5], &mut rng(8)).unwrap();
        let xs = [vec![0.1, 0.2], vec![-0.3, 0.4]];
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs
            .iter()
            .map(|x| (x.clone(), net.apply(x).unwrap()))
            .collect();
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let (loss, grads) = net.loss_and_grad(&batch, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|g| *g == 0.0));
    }

    /// Performance contract: no Jacobian work unless the penalty is active.
    #[test]
    fn zero_penalty_skips_jacobians() {
        let mut net = Fnn::new(1, &[5], &mut rng(9)).unwrap();
        let batch = Batch::from_pairs(
            1,
            &[(vec![0.1, 0.2], vec![0.0, 0.1]), (vec![0.3, -0.1], vec![0.2, 0.0])],
        )
        .unwrap();
        net.loss_and_grad(&batch, 0.0).unwrap();
        net.loss(&batch, 0.0).unwrap();
        assert_eq!(net.jacobian_calls(), 0);
        net.loss(&batch, 0.1).unwrap();
        assert_eq!(net.jacobian_calls(), 2);
        net.loss_and_grad(&batch, 0.1).unwrap();
        assert!(net.jacobian_calls() > 2);
    }

    #[test]
    fn untrained_net_has_positive_symplectic_defect() {
        let net = Fnn::baseline(1, &mut rng(10)).unwrap();
        let batch = Batch::from_pairs(1, &[(vec![0.3, -0.2], vec![0.0, 0.0])]).unwrap();
        assert!(net.symplecticity_mse(&batch).unwrap() > 1e-3);
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let net = Fnn::new(2, &[7, 3], &mut rng(11)).unwrap();
        let text = net.to_json().unwrap();
        let back = Fnn::from_json(&text).unwrap();
        assert_eq!(net, back);
        assert_eq!(net.params(), back.params());
    }

    #[test]
    fn malformed_json_is_an_error() {
        let net = Fnn::new(1, &[3], &mut rng(12)).unwrap();
        let text = net.to_json().unwrap();
        assert!(Fnn::from_json(&text[..text.len() / 2]).is_err());
        assert!(Fnn::from_json("{}").is_err());
        let wrong = text.replace("\"fnn\"", "\"sympnet\"");
        assert!(matches!(Fnn::from_json(&wrong), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn set_params_round_trips_and_validates() {
        let mut net = Fnn::new(1, &[3], &mut rng(13)).unwrap();
        let p: Vec<f64> = (0..net.param_count()).map(|i| i as f64 * 0.01).collect();
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
        assert!(net.set_params(&p[1..]).is_err());
        let mut bad = p.clone();
        bad[0] = f64::INFINITY;
        assert!(net.set_params(&bad).is_err());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let net = Fnn::new(2, &[4], &mut rng(14)).unwrap();
        assert!(net.apply(&[1.0, 2.0]).is_err());
        let batch = Batch::new(1, vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert!(net.loss(&batch, 0.0).is_err());
        // Inconsistent layer chains are rejected at construction.
        let l1 = DenseLayer::new(Array2::zeros((3, 4)), Array1::zeros(3), LayerActivation::Sigmoid)
            .unwrap();
        let l2 = DenseLayer::new(Array2::zeros((4, 2)), Array1::zeros(4), LayerActivation::Identity)
            .unwrap();
        assert!(Fnn::from_layers(2, vec![l1, l2]).is_err());
    }
}
