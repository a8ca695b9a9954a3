//! Phase-space primitives: points, the canonical symplectic form, and the
//! built-in Hamiltonian systems.
//!
//! Coordinates are ordered `(p_1..p_d, q_1..q_d)`, so a state vector has
//! length `2d`. The canonical form is
//!
//! ```text
//! J = [  0   I ]         J^{ -1} = J^T = -J
//!     [ -I   0 ]
//! ```
//!
//! and every system evolves by `dy/dt = J^{-1} grad H(y)`, i.e.
//! `dp/dt = -dH/dq`, `dq/dt = dH/dp`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated point in phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    /// Builds a point from `(p_1..p_d, q_1..q_d)` coordinates.
    ///
    /// Fails when the length is odd or zero, or any coordinate is non-finite.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "phase point needs a positive even number of coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("phase point coordinate {c}")));
        }
        Ok(Self { coords })
    }

    /// Degrees of freedom `d` (half the coordinate count).
    pub fn dof(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Momentum block `p_1..p_d`.
    pub fn p(&self) -> &[f64] {
        &self.coords[..self.dof()]
    }

    /// Position block `q_1..q_d`.
    pub fn q(&self) -> &[f64] {
        &self.coords[self.dof()..]
    }
}

/// The canonical symplectic form on `R^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    d: usize,
}

impl SymplecticForm {
    pub fn new(d: usize) -> Self {
        Self { d }
    }

    pub fn dim(&self) -> usize {
        2 * self.d
    }

    /// Dense row-major `2d x 2d` matrix of the form.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.dim();
        let mut j = vec![0.0; n * n];
        for i in 0..self.d {
            j[i * n + self.d + i] = 1.0;
            j[(self.d + i) * n + i] = -1.0;
        }
        j
    }

    /// Frobenius norm of `M^T J M - J` for a row-major `2d x 2d` matrix `M`.
    ///
    /// Zero exactly when `M` is symplectic.
    pub fn residual(&self, m: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(m.len(), n * n, "matrix must be {n}x{n} row-major");
        let d = self.d;
        // jm = J * M: top block rows are M[d.., :], bottom block rows are -M[..d, :].
        let mut jm = vec![0.0; n * n];
        for i in 0..d {
            for col in 0..n {
                jm[i * n + col] = m[(d + i) * n + col];
                jm[(d + i) * n + col] = -m[i * n + col];
            }
        }
        let mut sum = 0.0;
        for i in 0..n {
            for jcol in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[k * n + i] * jm[k * n + jcol];
                }
                let target = if i < d && jcol == d + i {
                    1.0
                } else if i >= d && jcol == i - d {
                    -1.0
                } else {
                    0.0
                };
                let diff = acc - target;
                sum += diff * diff;
            }
        }
        sum.sqrt()
    }
}

/// Built-in Hamiltonian systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    /// `H = p^2/2 - cos q`, one degree of freedom.
    Pendulum,
    /// `H = p - e^p + 2q - e^q`, one degree of freedom.
    LotkaVolterra,
    /// `H = |p|^2/2 - 1/|q|`, two degrees of freedom.
    Kepler,
    /// `H = (p^2 + q^2)/2`, one degree of freedom.
    Harmonic,
}

/// Distance to the Kepler center below which evaluation is rejected.
const KEPLER_MIN_RADIUS: f64 = 1e-12;

impl System {
    pub const ALL: [System; 4] = [
        System::Pendulum,
        System::LotkaVolterra,
        System::Kepler,
        System::Harmonic,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "pendulum" => Ok(System::Pendulum),
            "lotka-volterra" => Ok(System::LotkaVolterra),
            "kepler" => Ok(System::Kepler),
            "harmonic" => Ok(System::Harmonic),
            other => Err(Error::invalid(format!(
                "unknown system {other:?}; expected one of pendulum, lotka-volterra, kepler, harmonic"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            System::Pendulum => "pendulum",
            System::LotkaVolterra => "lotka-volterra",
            System::Kepler => "kepler",
            System::Harmonic => "harmonic",
        }
    }

    /// Degrees of freedom.
    pub fn dof(&self) -> usize {
        match self {
            System::Kepler => 2,
            _ => 1,
        }
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        let expected = 2 * self.dof();
        if y.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: y.len(),
            });
        }
        Ok(())
    }

    /// Total energy `H(y)`.
    pub fn energy(&self, y: &[f64]) -> Result<f64> {
        self.check_dim(y)?;
        let h = match self {
            System::Pendulum => 0.5 * y[0] * y[0] - y[1].cos(),
            System::LotkaVolterra => y[0] - y[0].exp() + 2.0 * y[1] - y[1].exp(),
            System::Kepler => {
                let r = kepler_radius(self, y)?;
                0.5 * (y[0] * y[0] + y[1] * y[1]) - 1.0 / r
            }
            System::Harmonic => 0.5 * (y[0] * y[0] + y[1] * y[1]),
        };
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("H at {y:?} for {}", self.name())));
        }
        Ok(h)
    }

    /// Gradient `grad H(y)`, length `2d`.
    pub fn grad_energy(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        let g = match self {
            System::Pendulum => vec![y[0], y[1].sin()],
            System::LotkaVolterra => vec![1.0 - y[0].exp(), 2.0 - y[1].exp()],
            System::Kepler => {
                let r = kepler_radius(self, y)?;
                let r3 = r * r * r;
                vec![y[0], y[1], y[2] / r3, y[3] / r3]
            }
            System::Harmonic => vec![y[0], y[1]],
        };
        if let Some(c) = g.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!(
                "grad H component {c} at {y:?} for {}",
                self.name()
            )));
        }
        Ok(g)
    }

    /// Hamiltonian vector field `J grad H(y)` written into `out`.
    pub fn vector_field_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(y)?;
        if out.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                actual: out.len(),
            });
        }
        let d = self.dof();
        let g = self.grad_energy(y)?;
        for i in 0..d {
            out[i] = -g[d + i];
            out[d + i] = g[i];
        }
        Ok(())
    }

    /// Hamiltonian vector field `J grad H(y)`.
    pub fn vector_field(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.vector_field_into(y, &mut out)?;
        Ok(out)
    }

    /// Default sampling box `(lower, upper)` per coordinate, used for data
    /// generation when no box is given.
    pub fn default_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            System::Pendulum => {
                let s = std::f64::consts::SQRT_2;
                let h = std::f64::consts::FRAC_PI_2;
                (vec![-s, -h], vec![s, h])
            }
            System::LotkaVolterra => (vec![-2.0, -0.5], vec![1.5, 2.0]),
            // Keeps sampled orbits clear of the collision singularity at q = 0.
            System::Kepler => (vec![-0.5, -0.5, 0.5, 0.5], vec![0.5, 0.5, 1.5, 1.5]),
            System::Harmonic => (vec![-1.0, -1.0], vec![1.0, 1.0]),
        }
    }
}

fn kepler_radius(system: &System, y: &[f64]) -> Result<f64> {
    let r = (y[2] * y[2] + y[3] * y[3]).sqrt();
    if r < KEPLER_MIN_RADIUS {
        return Err(Error::Singularity {
            system: system.name().to_string(),
            radius: r,
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phase_point_validates_shape_and_finiteness() {
        assert!(PhasePoint::new(vec![1.0, 2.0]).is_ok());
        assert!(PhasePoint::new(vec![]).is_err());
        assert!(PhasePoint::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(PhasePoint::new(vec![f64::NAN, 0.0]).is_err());
        assert!(PhasePoint::new(vec![f64::INFINITY, 0.0]).is_err());

        let pt = PhasePoint::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(pt.dof(), 2);
        assert_eq!(pt.p(), &[1.0, 2.0]);
        assert_eq!(pt.q(), &[3.0, 4.0]);
    }

    #[test]
    fn pinned_energies() {
        assert_relative_eq!(System::Pendulum.energy(&[0.0, 0.0]).unwrap(), -1.0);
        assert_relative_eq!(System::LotkaVolterra.energy(&[0.0, 0.0]).unwrap(), -2.0);
        assert_relative_eq!(
            System::Kepler.energy(&[1.0, 0.0, 0.0, 1.0]).unwrap(),
            -0.5
        );
        assert_relative_eq!(System::Harmonic.energy(&[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn kepler_field_at_circular_orbit_point() {
        let f = System::Kepler.vector_field(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(f[0], 0.0);
        assert_relative_eq!(f[1], -1.0);
        assert_relative_eq!(f[2], 1.0);
        assert_relative_eq!(f[3], 0.0);
    }

    #[test]
    fn kepler_rejects_near_collision() {
        let err = System::Kepler.energy(&[0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
    }

    #[test]
    fn name_round_trip() {
        for sys in System::ALL {
            assert_eq!(System::from_name(sys.name()).unwrap(), sys);
        }
        assert!(System::from_name("nope").is_err());
    }

    /// grad H must match central differences of H.
    #[test]
    fn gradient_matches_finite_differences() {
        let cases: [(System, Vec<f64>); 4] = [
            (System::Pendulum, vec![0.3, -0.7]),
            (System::LotkaVolterra, vec![0.4, 1.1]),
            (System::Kepler, vec![0.2, -0.1, 0.8, 0.9]),
            (System::Harmonic, vec![-0.6, 0.25]),
        ];
        let eps = 1e-6;
        for (sys, y) in cases {
            let g = sys.grad_energy(&y).unwrap();
            for i in 0..y.len() {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[i] += eps;
                ym[i] -= eps;
                let fd = (sys.energy(&yp).unwrap() - sys.energy(&ym).unwrap()) / (2.0 * eps);
                assert_relative_eq!(g[i], fd, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn field_is_j_times_gradient() {
        let y = [0.3, -0.2, 0.9, 1.1];
        let g = System::Kepler.grad_energy(&y).unwrap();
        let f = System::Kepler.vector_field(&y).unwrap();
        assert_relative_eq!(f[0], -g[2]);
        assert_relative_eq!(f[1], -g[3]);
        assert_relative_eq!(f[2], g[0]);
        assert_relative_eq!(f[3], g[1]);
    }

    #[test]
    fn residual_detects_non_symplectic_maps() {
        let form = SymplecticForm::new(1);
        // J itself is symplectic.
        assert!(form.residual(&form.matrix()) < 1e-15);
        // The identity is symplectic.
        let eye = vec![1.0, 0.0, 0.0, 1.0];
        assert!(form.residual(&eye) < 1e-15);
        // 2I scales the form by 4, so the residual is |3 J|_F = 3 sqrt(2).
        let two_eye = vec![2.0, 0.0, 0.0, 2.0];
        assert_relative_eq!(form.residual(&two_eye), 3.0 * 2.0f64.sqrt());
    }

    #[test]
    fn residual_for_d2_shear() {
        let form = SymplecticForm::new(2);
        let n = 4;
        // Symplectic shear: p' = p + S q with symmetric S.
        let s = [[1.3, 0.4], [0.4, -0.2]];
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        for i in 0..2 {
            for j in 0..2 {
                m[i * n + 2 + j] = s[i][j];
            }
        }
        assert!(form.residual(&m) < 1e-14);
        // Breaking the symmetry of S breaks symplecticity.
        m[2 + 1] += 0.1;
        assert!(form.residual(&m) > 1e-3);
    }
}
