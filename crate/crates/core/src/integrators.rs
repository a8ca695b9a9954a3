//! Reference integrators used to manufacture training data and ground-truth
//! trajectories: the implicit midpoint rule (order 2) and the two-stage
//! Gauss collocation method (order 4). Both are symplectic, so reference
//! flows carry the same structure the models are meant to learn.
//!
//! Implicit stage equations are solved by fixed-point iteration, which
//! converges for the step sizes used here (|h| well below the contraction
//! bound of the field).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Midpoint,
    Gauss4,
}

impl Scheme {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "midpoint" => Ok(Scheme::Midpoint),
            "gauss4" => Ok(Scheme::Gauss4),
            other => Err(Error::invalid(format!(
                "unknown scheme {other:?}; expected midpoint or gauss4"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Midpoint => "midpoint",
            Scheme::Gauss4 => "gauss4",
        }
    }

    /// Classical order of accuracy.
    pub fn order(&self) -> usize {
        match self {
            Scheme::Midpoint => 2,
            Scheme::Gauss4 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Number of equal substeps each step of size `h` is split into.
    pub substeps: usize,
    /// Sup-norm tolerance for the fixed-point iteration.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Gauss4,
            substeps: 10,
            fp_tol: 1e-12,
            fp_max_iter: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::invalid("substeps must be at least 1"));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol.is_finite()) {
            return Err(Error::invalid(format!("fp_tol must be positive, got {}", self.fp_tol)));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::invalid("fp_max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Advances `y` by one step of size `h` (split into `cfg.substeps` substeps).
pub fn step(system: System, y: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !h.is_finite() {
        return Err(Error::NonFinite(format!("step size {h}")));
    }
    let sub_h = h / cfg.substeps as f64;
    let mut state = y.to_vec();
    for _ in 0..cfg.substeps {
        state = match cfg.scheme {
            Scheme::Midpoint => midpoint_substep(system, &state, sub_h, cfg)?,
            Scheme::Gauss4 => gauss4_substep(system, &state, sub_h, cfg)?,
        };
    }
    Ok(state)
}

/// Trajectory produced by [`rollout`]. On failure `states` holds the valid
/// prefix (always at least the start point) and `error` says what stopped it.
#[derive(Debug)]
pub struct Rollout {
    pub states: Vec<Vec<f64>>,
    pub error: Option<Error>,
}

impl Rollout {
    pub fn into_result(self) -> Result<Vec<Vec<f64>>> {
        match self.error {
            None => Ok(self.states),
            Some(e) => Err(e),
        }
    }
}

/// Integrates `steps` steps of size `h` from `y0`, keeping every state.
pub fn rollout(system: System, y0: &[f64], h: f64, steps: usize, cfg: &IntegratorConfig) -> Rollout {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(y0.to_vec());
    for _ in 0..steps {
        match step(system, states.last().expect("non-empty"), h, cfg) {
            Ok(next) => states.push(next),
            Err(e) => return Rollout { states, error: Some(e) },
        }
    }
    Rollout { states, error: None }
}

/// One implicit midpoint substep: solve `z = y + (h/2) f(z)`, return `2z - y`.
fn midpoint_substep(system: System, y: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let n = y.len();
    let mut z = y.to_vec();
    let mut f = vec![0.0; n];
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.fp_max_iter {
        system.vector_field_into(&z, &mut f)?;
        let mut change = 0.0f64;
        for i in 0..n {
            let zi = y[i] + 0.5 * h * f[i];
            change = change.max((zi - z[i]).abs());
            z[i] = zi;
        }
        last_change = change;
        if change < cfg.fp_tol {
            let mut out = z;
            for i in 0..n {
                out[i] = 2.0 * out[i] - y[i];
            }
            return Ok(out);
        }
    }
    Err(Error::NoConvergence {
        max_iter: cfg.fp_max_iter,
        last_change,
    })
}

/// One substep of the two-stage Gauss method (order 4). The stage slopes
/// `k1, k2` satisfy `k_i = f(y + h (a_i1 k1 + a_i2 k2))`.
fn gauss4_substep(system: System, y: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let s6 = 3.0f64.sqrt() / 6.0;
    let a = [[0.25, 0.25 - s6], [0.25 + s6, 0.25]];
    let n = y.len();

    let mut k1 = vec![0.0; n];
    system.vector_field_into(y, &mut k1)?;
    let mut k2 = k1.clone();
    let mut g = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.fp_max_iter {
        for i in 0..n {
            g[i] = y[i] + h * (a[0][0] * k1[i] + a[0][1] * k2[i]);
        }
        system.vector_field_into(&g, &mut f1)?;
        for i in 0..n {
            g[i] = y[i] + h * (a[1][0] * k1[i] + a[1][1] * k2[i]);
        }
        system.vector_field_into(&g, &mut f2)?;
        let mut change = 0.0f64;
        for i in 0..n {
            change = change.max((f1[i] - k1[i]).abs()).max((f2[i] - k2[i]).abs());
        }
        k1.copy_from_slice(&f1);
        k2.copy_from_slice(&f2);
        last_change = change;
        if change < cfg.fp_tol {
            let mut out = y.to_vec();
            for i in 0..n {
                out[i] += 0.5 * h * (k1[i] + k2[i]);
            }
            return Ok(out);
        }
    }
    Err(Error::NoConvergence {
        max_iter: cfg.fp_max_iter,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(scheme: Scheme, substeps: usize) -> IntegratorConfig {
        IntegratorConfig {
            scheme,
            substeps,
            fp_tol: 1e-13,
            fp_max_iter: 200,
        }
    }

    /// Independent oracle: classical RK4 with a very small internal step.
    fn rk4_fine(system: System, y0: &[f64], h: f64, substeps: usize) -> Vec<f64> {
        let n = y0.len();
        let dt = h / substeps as f64;
        let mut y = y0.to_vec();
        for _ in 0..substeps {
            let k1 = system.vector_field(&y).unwrap();
            let mut tmp: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k1[i]).collect();
            let k2 = system.vector_field(&tmp).unwrap();
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * dt * k2[i];
            }
            let k3 = system.vector_field(&tmp).unwrap();
            for i in 0..n {
                tmp[i] = y[i] + dt * k3[i];
            }
            let k4 = system.vector_field(&tmp).unwrap();
            for i in 0..n {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    }

    fn harmonic_exact(y0: &[f64], t: f64) -> Vec<f64> {
        let (c, s) = (t.cos(), t.sin());
        vec![y0[0] * c - y0[1] * s, y0[0] * s + y0[1] * c]
    }

    fn global_error(scheme: Scheme, h: f64) -> f64 {
        let y0 = [0.4, 0.9];
        let steps = (1.0 / h).round() as usize;
        let states = rollout(System::Harmonic, &y0, h, steps, &cfg(scheme, 1))
            .into_result()
            .unwrap();
        let exact = harmonic_exact(&y0, 1.0);
        states
            .last()
            .unwrap()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Halving h divides the fixed-interval error by ~2^order.
    #[test]
    fn convergence_orders_on_harmonic() {
        let e1 = global_error(Scheme::Midpoint, 0.1);
        let e2 = global_error(Scheme::Midpoint, 0.05);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "midpoint ratio {ratio}");

        let e1 = global_error(Scheme::Gauss4, 0.2);
        let e2 = global_error(Scheme::Gauss4, 0.1);
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "gauss4 ratio {ratio}");
    }

    #[test]
    fn steps_match_fine_rk4_oracle() {
        for system in [System::Pendulum, System::LotkaVolterra] {
            let y0 = [0.3, 0.7];
            let reference = rk4_fine(system, &y0, 0.1, 2000);
            let mp = step(system, &y0, 0.1, &cfg(Scheme::Midpoint, 400)).unwrap();
            let g4 = step(system, &y0, 0.1, &cfg(Scheme::Gauss4, 10)).unwrap();
            for i in 0..2 {
                assert_relative_eq!(mp[i], reference[i], epsilon = 1e-9);
                assert_relative_eq!(g4[i], reference[i], epsilon = 1e-11);
            }
        }
        let y0 = [0.2, -0.1, 0.8, 0.9];
        let reference = rk4_fine(System::Kepler, &y0, 0.1, 2000);
        let g4 = step(System::Kepler, &y0, 0.1, &cfg(Scheme::Gauss4, 10)).unwrap();
        for i in 0..4 {
            assert_relative_eq!(g4[i], reference[i], epsilon = 1e-10);
        }
    }

    /// Gauss methods conserve quadratic first integrals exactly; only the
    /// fixed-point tolerance accumulates.
    #[test]
    fn midpoint_conserves_quadratic_energy() {
        let y0 = [0.0, 1.0];
        let h0 = System::Harmonic.energy(&y0).unwrap();
        let states = rollout(System::Harmonic, &y0, 0.1, 1000, &cfg(Scheme::Midpoint, 1))
            .into_result()
            .unwrap();
        for y in &states {
            let h = System::Harmonic.energy(y).unwrap();
            assert!((h - h0).abs() < 1e-9, "energy drift {}", (h - h0).abs());
        }
    }

    #[test]
    fn substeps_compose_exactly() {
        let y0 = [0.3, 0.7];
        let once = step(System::Pendulum, &y0, 0.1, &cfg(Scheme::Gauss4, 2)).unwrap();
        let half = step(System::Pendulum, &y0, 0.05, &cfg(Scheme::Gauss4, 1)).unwrap();
        let twice = step(System::Pendulum, &half, 0.05, &cfg(Scheme::Gauss4, 1)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn non_contractive_step_reports_no_convergence() {
        // h/2 = 1 turns the midpoint fixed point into a pure rotation, which
        // never settles.
        let err = step(System::Harmonic, &[0.0, 1.0], 2.0, &cfg(Scheme::Midpoint, 1)).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }), "{err}");
    }

    #[test]
    fn rollout_keeps_prefix_on_failure() {
        let bad = IntegratorConfig {
            scheme: Scheme::Midpoint,
            substeps: 1,
            fp_tol: 1e-13,
            fp_max_iter: 100,
        };
        let roll = rollout(System::Harmonic, &[0.0, 1.0], 2.0, 5, &bad);
        assert_eq!(roll.states.len(), 1);
        assert!(roll.error.is_some());
    }

    #[test]
    fn config_validation() {
        let c = IntegratorConfig {
            substeps: 0,
            ..IntegratorConfig::default()
        };
        assert!(step(System::Harmonic, &[0.0, 1.0], 0.1, &c).is_err());
        let c = IntegratorConfig {
            fp_tol: -1.0,
            ..IntegratorConfig::default()
        };
        assert!(step(System::Harmonic, &[0.0, 1.0], 0.1, &c).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Midpoint, Scheme::Gauss4] {
            assert_eq!(Scheme::from_name(s.name()).unwrap(), s);
        }
        assert!(Scheme::from_name("rk4").is_err());
    }
}
