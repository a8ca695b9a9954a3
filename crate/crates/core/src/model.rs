//! Shared model interface: phase-space maps, trainable models, and the
//! flat batch container both networks consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::Rollout;

/// A differentiable map on phase space `R^{2d} -> R^{2d}`.
pub trait PhaseMap {
    /// Degrees of freedom `d`.
    fn dof(&self) -> usize;

    /// Coordinate count `2d`.
    fn dim(&self) -> usize {
        2 * self.dof()
    }

    /// Evaluates the map at `x` (length `2d`).
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Row-major `2d x 2d` Jacobian at `x`.
    ///
    /// The default is central finite differences; models with analytic
    /// derivatives override it.
    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd_jacobian(|z| self.apply(z), x, 1e-6)
    }
}

/// Central-difference Jacobian of `f` at `x`, row-major with
/// `out[i * n + j] = d f_i / d x_j`.
pub fn fd_jacobian<F>(f: F, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = vec![0.0; n * n];
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + eps;
        xm[j] = x[j] - eps;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        if fp.len() != n || fm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: fp.len(),
            });
        }
        for i in 0..n {
            jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * eps);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(jac)
}

/// Iterates a phase map from `x0`, keeping every state. On failure the
/// valid prefix is returned along with the error.
pub fn rollout_map(map: &dyn PhaseMap, x0: &[f64], steps: usize) -> Rollout {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for _ in 0..steps {
        match map.apply(states.last().expect("non-empty")) {
            Ok(next) => states.push(next),
            Err(e) => return Rollout { states, error: Some(e) },
        }
    }
    Rollout { states, error: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SympNet,
    Fnn,
}

impl ModelKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sympnet" => Ok(ModelKind::SympNet),
            "fnn" => Ok(ModelKind::Fnn),
            other => Err(Error::invalid(format!(
                "unknown model kind {other:?}; expected sympnet or fnn"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::SympNet => "sympnet",
            ModelKind::Fnn => "fnn",
        }
    }
}

/// A phase map with a flat parameter vector and a trainable objective.
///
/// The objective is `MSE_d + w * MSE_s`, where `MSE_d` is the mean squared
/// prediction error (per-sample squared norm averaged over the batch) and
/// `MSE_s` penalizes the symplecticity residual of the Jacobian. Models that
/// are symplectic by construction have `MSE_s = 0` identically and ignore
/// `w_penalty`.
pub trait TrainableModel: PhaseMap {
    fn kind(&self) -> ModelKind;

    fn param_count(&self) -> usize;

    /// Flat parameter vector in the model's canonical order.
    fn params(&self) -> Vec<f64>;

    /// Writes a flat parameter vector produced by [`Self::params`] back.
    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    /// Objective value at the current parameters.
    fn loss(&self, batch: &Batch, w_penalty: f64) -> Result<f64>;

    /// Objective and its gradient with respect to the flat parameters.
    ///
    /// Takes `&mut self` so implementations can reuse internal scratch
    /// buffers across the many calls a training run makes; the parameters
    /// and the map itself are unchanged.
    fn loss_and_grad(&mut self, batch: &Batch, w_penalty: f64) -> Result<(f64, Vec<f64>)>;
}

/// Input/target pairs stored as row-major `len x 2d` slabs.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    d: usize,
    len: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Batch {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("batch needs d >= 1"));
        }
        let w = 2 * d;
        if xs.len() != ys.len() || xs.is_empty() || !xs.len().is_multiple_of(w) {
            return Err(Error::invalid(format!(
                "batch slabs must be equal non-empty multiples of {w}, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(c) = xs.iter().chain(ys.iter()).find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("batch entry {c}")));
        }
        let len = xs.len() / w;
        Ok(Self { d, len, xs, ys })
    }

    pub fn from_pairs(d: usize, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let mut xs = Vec::with_capacity(pairs.len() * 2 * d);
        let mut ys = Vec::with_capacity(pairs.len() * 2 * d);
        for (x, y) in pairs {
            if x.len() != 2 * d || y.len() != 2 * d {
                return Err(Error::DimensionMismatch {
                    expected: 2 * d,
                    actual: x.len(),
                });
            }
            xs.extend_from_slice(x);
            ys.extend_from_slice(y);
        }
        Self::new(d, xs, ys)
    }

    pub fn dof(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        2 * self.d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Mean over samples of the squared Euclidean distance between
    /// `map(x_i)` and `y_i`.
    pub fn mse(&self, map: &dyn PhaseMap) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.len {
            let out = map.apply(self.x(i))?;
            total += out
                .iter()
                .zip(self.y(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        Ok(total / self.len as f64)
    }
}
