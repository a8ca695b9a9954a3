//! Geometric verification: symplecticity residuals, energy drift along
//! rollouts, and gradient checking against finite differences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Batch, PhaseMap, TrainableModel};
use crate::phase::{SymplecticForm, System};

pub use crate::model::fd_jacobian;

/// Per-point symplecticity residuals |M^T J M - J|_F of a map's Jacobian.
#[derive(Debug, Clone, Serialize)]
pub struct SymplecticReport {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub mean_residual: f64,
}

impl SymplecticReport {
    /// One row per point: the coordinates, then the residual.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, |p| p.len());
        let mut out = String::new();
        for i in 1..=dim {
            out.push_str(&format!("x{i},"));
        }
        out.push_str("residual\n");
        for (p, r) in self.points.iter().zip(&self.residuals) {
            for c in p {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{r}\n"));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary {
            points: usize,
            max_residual: f64,
            mean_residual: f64,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            points: self.points.len(),
            max_residual: self.max_residual,
            mean_residual: self.mean_residual,
        })?)
    }
}

/// Evaluates |M^T J M - J|_F at each point, using the map's Jacobian
/// (analytic where the map provides one, finite differences otherwise).
pub fn symplectic_residual(map: &dyn PhaseMap, points: &[Vec<f64>]) -> Result<SymplecticReport> {
    if points.is_empty() {
        return Err(Error::invalid("need at least one probe point"));
    }
    let form = SymplecticForm::new(map.dof());
    let mut residuals = Vec::with_capacity(points.len());
    let mut max_residual = 0.0f64;
    let mut total = 0.0;
    for p in points {
        if p.len() != map.dim() {
            return Err(Error::DimensionMismatch {
                expected: map.dim(),
                actual: p.len(),
            });
        }
        let jac = map.jacobian(p)?;
        let r = form.residual(&jac);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("residual at {p:?}")));
        }
        max_residual = max_residual.max(r);
        total += r;
        residuals.push(r);
    }
    Ok(SymplecticReport {
        points: points.to_vec(),
        residuals,
        max_residual,
        mean_residual: total / points.len() as f64,
    })
}

/// Energy error H(y_k) - H(y_0) along a trajectory, and its maximum
/// absolute value.
pub fn energy_drift(system: System, states: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if states.is_empty() {
        return Err(Error::invalid("need at least one state"));
    }
    let e0 = system.energy(&states[0])?;
    let mut drift = Vec::with_capacity(states.len());
    let mut max_abs = 0.0f64;
    for s in states {
        let d = system.energy(s)? - e0;
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("energy at {s:?}")));
        }
        max_abs = max_abs.max(d.abs());
        drift.push(d);
    }
    Ok((drift, max_abs))
}

/// Drift series as CSV (`step,energy_error`).
pub fn drift_to_csv(drift: &[f64]) -> String {
    let mut out = String::from("step,energy_error\n");
    for (k, d) in drift.iter().enumerate() {
        out.push_str(&format!("{k},{d}\n"));
    }
    out
}

/// Worst relative disagreement between a model's analytic gradient and a
/// central-difference probe of its loss, over all parameters. Denominators
/// are floored at 1e-8 so a stationary model reports ~0 instead of 0/0.
pub fn gradient_check<M: TrainableModel + Clone>(
    model: &M,
    batch: &Batch,
    w_penalty: f64,
    eps: f64,
) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let params = model.params();
    let mut probe = model.clone();
    let (_, grads) = probe.loss_and_grad(batch, w_penalty)?;
    let mut worst = 0.0f64;
    let mut scratch = params.clone();
    for idx in 0..params.len() {
        scratch[idx] = params[idx] + eps;
        probe.set_params(&scratch)?;
        let lp = probe.loss(batch, w_penalty)?;
        scratch[idx] = params[idx] - eps;
        probe.set_params(&scratch)?;
        let lm = probe.loss(batch, w_penalty)?;
        scratch[idx] = params[idx];
        let fd = (lp - lm) / (2.0 * eps);
        let rel = (grads[idx] - fd).abs() / (grads[idx].abs() + fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
