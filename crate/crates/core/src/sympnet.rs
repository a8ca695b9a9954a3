//! Symplectic network: an alternating composition of h-scaled unit-triangular
//! linear units and parameter-free sigma gates,
//!
//! ```text
//! Phi_h = L ∘ (N ∘ L)^k
//! ```
//!
//! Every stage is a symplectic map for arbitrary parameter values, so the
//! whole network is symplectic by construction, reduces to the identity at
//! h = 0, and has an exact inverse obtained by reversing the stages and
//! negating their step scales.
//!
//! A linear unit applies n shear sublayers with alternating triangular sides
//! followed by an h-scaled bias:
//!
//! ```text
//! x  ->  M_n ... M_2 M_1 x + h b,    M_i = [[I, h S_i], [0, I]] or [[I, 0], [h S_i, I]]
//! ```
//!
//! where each `S_i = (A_i + A_i^T)/2` is the symmetrization of an
//! unconstrained raw matrix. A gate adds a scaled activation of one block to
//! the other: upper is `(p, q) -> (p + h sigma(q), q)`, lower mirrors it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::model::{Batch, ModelKind, PhaseMap, TrainableModel};

/// Gate nonlinearity. The derivative is computed from the cached forward
/// value: sigmoid' = s(1-s), tanh' = 1 - s^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::invalid(format!(
                "unknown activation {other:?}; expected sigmoid or tanh"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// sigma'(x) expressed through s = sigma(x).
    #[inline]
    fn deriv_from_value(self, s: f64) -> f64 {
        match self {
            Activation::Sigmoid => s * (1.0 - s),
            Activation::Tanh => 1.0 - s * s,
        }
    }
}

/// Which triangular block a shear or gate writes to: upper updates `p` from
/// `q`, lower updates `q` from `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }

    /// Start offsets `(written block, read block)` within a `(p, q)` row.
    #[inline]
    fn offsets(self, d: usize) -> (usize, usize) {
        match self {
            Side::Upper => (0, d),
            Side::Lower => (d, 0),
        }
    }
}

/// One unit-triangular shear. Only the symmetric part of `a_raw` enters the
/// map, which keeps the parametrization unconstrained while the induced
/// matrix stays exactly symplectic.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearSublayer {
    side: Side,
    /// Row-major d x d, unconstrained.
    a_raw: Vec<f64>,
}

impl ShearSublayer {
    pub fn new(side: Side, a_raw: Vec<f64>, d: usize) -> Result<Self> {
        if a_raw.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: a_raw.len(),
            });
        }
        Ok(Self { side, a_raw })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn a_raw(&self) -> &[f64] {
        &self.a_raw
    }

    /// `factor * (A + A^T)/2`, row-major.
    fn scaled_sym(&self, d: usize, factor: f64) -> Vec<f64> {
        let a = &self.a_raw;
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] = 0.5 * factor * (a[i * d + j] + a[j * d + i]);
            }
        }
        s
    }
}

/// n alternating shears followed by an h-scaled bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearUnit {
    sublayers: Vec<ShearSublayer>,
    /// Length 2d.
    bias: Vec<f64>,
}

impl LinearUnit {
    pub fn new(sublayers: Vec<ShearSublayer>, bias: Vec<f64>, d: usize) -> Result<Self> {
        if sublayers.is_empty() {
            return Err(Error::invalid("linear unit needs at least one sublayer"));
        }
        for pair in sublayers.windows(2) {
            if pair[0].side == pair[1].side {
                return Err(Error::invalid(
                    "linear unit sublayers must alternate sides",
                ));
            }
        }
        if bias.len() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                actual: bias.len(),
            });
        }
        Ok(Self { sublayers, bias })
    }

    pub fn sublayers(&self) -> &[ShearSublayer] {
        &self.sublayers
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Parameter-free sigma gate; `scale` is the optional trainable gain that
/// replaces h when the extension is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct GateUnit {
    side: Side,
    scale: Option<f64>,
}

impl GateUnit {
    pub fn new(side: Side, scale: Option<f64>) -> Result<Self> {
        if let Some(s) = scale {
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("gate scale {s}")));
            }
        }
        Ok(Self { side, scale })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Unit {
    Linear(LinearUnit),
    Gate(GateUnit),
}

/// Construction parameters for the canonical `L ∘ (N ∘ L)^k` layout.
#[derive(Debug, Clone, Copy)]
pub struct SympNetConfig {
    pub d: usize,
    pub h: f64,
    /// Gate count k; the network holds k+1 linear units.
    pub gate_units: usize,
    /// Shear sublayers n per linear unit.
    pub sublayers: usize,
    pub activation: Activation,
    /// Gives every gate its own trainable gain, initialized to h.
    pub trainable_gate_scale: bool,
}

impl SympNetConfig {
    pub fn new(d: usize, h: f64, gate_units: usize, sublayers: usize) -> Self {
        Self {
            d,
            h,
            gate_units,
            sublayers,
            activation: Activation::Sigmoid,
            trainable_gate_scale: false,
        }
    }
}

/// Spread of the uniform parameter initialization.
const INIT_SPREAD: f64 = 0.01;

/// Reusable training-pass slabs: the two coordinate blocks, their loss
/// derivatives, and the per-stage caches the backward pass reads. Contents
/// are meaningless between calls.
#[derive(Debug, Default)]
struct Scratch {
    pz: Vec<f64>,
    qz: Vec<f64>,
    dp: Vec<f64>,
    dq: Vec<f64>,
    shear_srcs: Vec<Vec<f64>>,
    gate_sigs: Vec<Vec<f64>>,
}

impl Scratch {
    fn ensure(&mut self, len: usize, shears: usize, gates: usize) {
        self.pz.resize(len, 0.0);
        self.qz.resize(len, 0.0);
        self.dp.resize(len, 0.0);
        self.dq.resize(len, 0.0);
        if self.shear_srcs.len() != shears || self.shear_srcs.iter().any(|v| v.len() != len) {
            self.shear_srcs = vec![vec![0.0; len]; shears];
        }
        if self.gate_sigs.len() != gates || self.gate_sigs.iter().any(|v| v.len() != len) {
            self.gate_sigs = vec![vec![0.0; len]; gates];
        }
    }
}

/// Scratch never affects observable behavior, so clones start empty and
/// all values compare equal.
impl Clone for Scratch {
    fn clone(&self) -> Self {
        Scratch::default()
    }
}

impl PartialEq for Scratch {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SympNet {
    d: usize,
    h: f64,
    activation: Activation,
    units: Vec<Unit>,
    scratch: Scratch,
}

/// Evaluation direction through the stage sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Forward,
    Inverse,
}

/// One primitive stage of the (possibly reversed, possibly negated) network.
enum Stage<'a> {
    /// Adds `factor * sym(a) *` (read block) to the written block.
    Shear {
        side: Side,
        a: &'a ShearSublayer,
        factor: f64,
    },
    /// Adds `factor * bias` to the whole row.
    Bias { bias: &'a [f64], factor: f64 },
    /// Adds `gain * sigma(read block)` to the written block.
    Gate { side: Side, gain: f64 },
}

impl SympNet {
    /// Builds the canonical network with gates alternating sides starting
    /// lower and shears alternating starting upper. Parameters are drawn
    /// i.i.d. uniform on [-0.01, 0.01].
    pub fn new(cfg: &SympNetConfig, rng: &mut impl Rng) -> Result<Self> {
        if cfg.d == 0 {
            return Err(Error::invalid("sympnet needs d >= 1"));
        }
        if cfg.sublayers == 0 {
            return Err(Error::invalid("sympnet needs at least one sublayer"));
        }
        if !cfg.h.is_finite() {
            return Err(Error::NonFinite(format!("step size {}", cfg.h)));
        }
        let d = cfg.d;
        let mut units = Vec::with_capacity(2 * cfg.gate_units + 1);
        let rand_linear = |rng: &mut dyn rand::RngCore| -> Result<Unit> {
            let mut subs = Vec::with_capacity(cfg.sublayers);
            let mut side = Side::Upper;
            for _ in 0..cfg.sublayers {
                let a: Vec<f64> = (0..d * d)
                    .map(|_| rng.random_range(-INIT_SPREAD..=INIT_SPREAD))
                    .collect();
                subs.push(ShearSublayer::new(side, a, d)?);
                side = side.other();
            }
            let bias: Vec<f64> = (0..2 * d)
                .map(|_| rng.random_range(-INIT_SPREAD..=INIT_SPREAD))
                .collect();
            Ok(Unit::Linear(LinearUnit::new(subs, bias, d)?))
        };
        units.push(rand_linear(rng)?);
        let mut gate_side = Side::Lower;
        for _ in 0..cfg.gate_units {
            let scale = cfg.trainable_gate_scale.then_some(cfg.h);
            units.push(Unit::Gate(GateUnit::new(gate_side, scale)?));
            units.push(rand_linear(rng)?);
            gate_side = gate_side.other();
        }
        Self::from_units(cfg.d, cfg.h, cfg.activation, units)
    }

    /// Assembles a network from an explicit unit list (deserialization,
    /// composition, hand-built fixtures).
    pub fn from_units(d: usize, h: f64, activation: Activation, units: Vec<Unit>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("sympnet needs d >= 1"));
        }
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("step size {h}")));
        }
        if units.is_empty() {
            return Err(Error::invalid("sympnet needs at least one unit"));
        }
        for unit in &units {
            match unit {
                Unit::Linear(lu) => {
                    if lu.bias.len() != 2 * d {
                        return Err(Error::DimensionMismatch {
                            expected: 2 * d,
                            actual: lu.bias.len(),
                        });
                    }
                    for sh in &lu.sublayers {
                        if sh.a_raw.len() != d * d {
                            return Err(Error::DimensionMismatch {
                                expected: d * d,
                                actual: sh.a_raw.len(),
                            });
                        }
                    }
                }
                Unit::Gate(_) => {}
            }
        }
        Ok(Self {
            d,
            h,
            activation,
            units,
            scratch: Scratch::default(),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    /// Gate unit count k.
    pub fn gate_count(&self) -> usize {
        self.units
            .iter()
            .filter(|u| matches!(u, Unit::Gate(_)))
            .count()
    }

    /// Shear sublayer count n of the first linear unit.
    pub fn sublayer_count(&self) -> usize {
        self.units
            .iter()
            .find_map(|u| match u {
                Unit::Linear(lu) => Some(lu.sublayers.len()),
                Unit::Gate(_) => None,
            })
            .unwrap_or(0)
    }

    /// The map applying `self` first and `other` second, as one network.
    /// Requires matching d, h and activation.
    pub fn compose(&self, other: &SympNet) -> Result<SympNet> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: 2 * other.d,
            });
        }
        if self.h != other.h || self.activation != other.activation {
            return Err(Error::invalid(
                "composition requires matching step size and activation",
            ));
        }
        let mut units = self.units.clone();
        units.extend(other.units.iter().cloned());
        Self::from_units(self.d, self.h, self.activation, units)
    }

    /// Exact inverse map (stages reversed, step scales negated), sharing
    /// this network's parameters.
    pub fn inverse(&self) -> SympNetInverse<'_> {
        SympNetInverse { net: self }
    }

    /// Symmetrized one-step map `Phi_{-h}^{-1} ∘ Phi_h`, sharing this
    /// network's parameters. Its inverse is itself at -h.
    pub fn symmetric(&self) -> SymmetricSympNet<'_> {
        SymmetricSympNet { net: self, sign: 1.0 }
    }

    /// Enumerates primitive stages for the chosen direction. `sign = -1`
    /// evaluates the network at step `-h` (gate gains included).
    fn for_each_stage<F: FnMut(Stage<'_>)>(&self, sign: f64, dir: Dir, mut f: F) {
        match dir {
            Dir::Forward => {
                for unit in &self.units {
                    match unit {
                        Unit::Linear(lu) => {
                            for sh in &lu.sublayers {
                                f(Stage::Shear {
                                    side: sh.side,
                                    a: sh,
                                    factor: sign * self.h,
                                });
                            }
                            f(Stage::Bias {
                                bias: &lu.bias,
                                factor: sign * self.h,
                            });
                        }
                        Unit::Gate(g) => f(Stage::Gate {
                            side: g.side,
                            gain: sign * g.scale.unwrap_or(self.h),
                        }),
                    }
                }
            }
            Dir::Inverse => {
                for unit in self.units.iter().rev() {
                    match unit {
                        Unit::Linear(lu) => {
                            f(Stage::Bias {
                                bias: &lu.bias,
                                factor: -sign * self.h,
                            });
                            for sh in lu.sublayers.iter().rev() {
                                f(Stage::Shear {
                                    side: sh.side,
                                    a: sh,
                                    factor: -sign * self.h,
                                });
                            }
                        }
                        Unit::Gate(g) => f(Stage::Gate {
                            side: g.side,
                            gain: -sign * g.scale.unwrap_or(self.h),
                        }),
                    }
                }
            }
        }
    }

    /// Applies one stage to a slab of `n` rows of width 2d, in place.
    fn apply_stage_slab(&self, z: &mut [f64], n: usize, stage: &Stage<'_>) {
        let d = self.d;
        let w = 2 * d;
        match stage {
            Stage::Shear { side, a, factor } => {
                let (dst, src) = side.offsets(d);
                let eff = a.scaled_sym(d, *factor);
                for r in 0..n {
                    let row = &mut z[r * w..(r + 1) * w];
                    for i in 0..d {
                        let mut acc = 0.0;
                        for j in 0..d {
                            acc += eff[i * d + j] * row[src + j];
                        }
                        row[dst + i] += acc;
                    }
                }
            }
            Stage::Bias { bias, factor } => {
                for r in 0..n {
                    let row = &mut z[r * w..(r + 1) * w];
                    for i in 0..w {
                        row[i] += factor * bias[i];
                    }
                }
            }
            Stage::Gate { side, gain } => {
                let (dst, src) = side.offsets(d);
                for r in 0..n {
                    let row = &mut z[r * w..(r + 1) * w];
                    for i in 0..d {
                        row[dst + i] += gain * self.activation.eval(row[src + i]);
                    }
                }
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != 2 * self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn eval_point(&self, x: &[f64], sign: f64, dir: Dir) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut z = x.to_vec();
        self.for_each_stage(sign, dir, |st| self.apply_stage_slab(&mut z, 1, &st));
        if let Some(c) = z.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("network output {c}")));
        }
        Ok(z)
    }

    /// Walks the stage sequence from `x`, left-multiplying each stage
    /// Jacobian into `m` (row-major 2d x 2d). Returns the final state.
    fn jacobian_walk(&self, x: &[f64], sign: f64, dir: Dir, m: &mut [f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let d = self.d;
        let w = 2 * d;
        debug_assert_eq!(m.len(), w * w);
        let mut z = x.to_vec();
        self.for_each_stage(sign, dir, |st| {
            match &st {
                Stage::Shear { side, a, factor } => {
                    let (dst, src) = side.offsets(d);
                    let eff = a.scaled_sym(d, *factor);
                    // row(dst+i) += sum_j eff[i][j] row(src+j)
                    for i in 0..d {
                        for col in 0..w {
                            let mut acc = 0.0;
                            for j in 0..d {
                                acc += eff[i * d + j] * m[(src + j) * w + col];
                            }
                            m[(dst + i) * w + col] += acc;
                        }
                    }
                }
                Stage::Bias { .. } => {}
                Stage::Gate { side, gain } => {
                    let (dst, src) = side.offsets(d);
                    for i in 0..d {
                        let s = self.activation.eval(z[src + i]);
                        let g = gain * self.activation.deriv_from_value(s);
                        for col in 0..w {
                            m[(dst + i) * w + col] += g * m[(src + i) * w + col];
                        }
                    }
                }
            }
            self.apply_stage_slab(&mut z, 1, &st);
        });
        Ok(z)
    }

    /// Forward evaluation of a whole row-major `n x 2d` slab.
    fn forward_slab(&self, xs: &[f64], n: usize) -> Vec<f64> {
        let mut z = xs.to_vec();
        self.for_each_stage(1.0, Dir::Forward, |st| self.apply_stage_slab(&mut z, n, &st));
        z
    }

    fn unit_param_count(&self, unit: &Unit) -> usize {
        match unit {
            Unit::Linear(lu) => lu.sublayers.len() * self.d * self.d + 2 * self.d,
            Unit::Gate(g) => usize::from(g.scale.is_some()),
        }
    }

    /// Start offset of each unit's parameters in the flat vector.
    fn param_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.units.len());
        let mut acc = 0;
        for unit in &self.units {
            offsets.push(acc);
            acc += self.unit_param_count(unit);
        }
        offsets
    }

    /// JSON serialization of the full architecture and parameters.
    pub fn to_json(&self) -> Result<String> {
        let file = SympNetFile {
            schema_version: SCHEMA_VERSION,
            kind: ModelKind::SympNet.name().to_string(),
            d: self.d,
            h: self.h,
            k: self.gate_count(),
            n: self.sublayer_count(),
            activation: self.activation,
            units: self
                .units
                .iter()
                .map(|u| match u {
                    Unit::Linear(lu) => UnitFile::Linear {
                        sublayers: lu
                            .sublayers
                            .iter()
                            .map(|sh| ShearFile {
                                side: sh.side,
                                a_raw: (0..self.d)
                                    .map(|i| sh.a_raw[i * self.d..(i + 1) * self.d].to_vec())
                                    .collect(),
                            })
                            .collect(),
                        bias: lu.bias.clone(),
                    },
                    Unit::Gate(g) => UnitFile::Gate {
                        side: g.side,
                        scale: g.scale,
                    },
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SympNetFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        if file.kind != ModelKind::SympNet.name() {
            return Err(Error::ModelFormat(format!(
                "expected kind \"sympnet\", got {:?}",
                file.kind
            )));
        }
        let d = file.d;
        let mut units = Vec::with_capacity(file.units.len());
        for unit in file.units {
            match unit {
                UnitFile::Linear { sublayers, bias } => {
                    let mut subs = Vec::with_capacity(sublayers.len());
                    for sh in sublayers {
                        if sh.a_raw.len() != d || sh.a_raw.iter().any(|row| row.len() != d) {
                            return Err(Error::ModelFormat(format!(
                                "a_raw must be {d}x{d}"
                            )));
                        }
                        let flat: Vec<f64> = sh.a_raw.into_iter().flatten().collect();
                        subs.push(ShearSublayer::new(sh.side, flat, d)?);
                    }
                    units.push(Unit::Linear(LinearUnit::new(subs, bias, d).map_err(
                        |e| Error::ModelFormat(format!("bad linear unit: {e}")),
                    )?));
                }
                UnitFile::Gate { side, scale } => {
                    units.push(Unit::Gate(GateUnit::new(side, scale)?));
                }
            }
        }
        let net = Self::from_units(d, file.h, file.activation, units)
            .map_err(|e| Error::ModelFormat(format!("bad network: {e}")))?;
        if net.gate_count() != file.k {
            return Err(Error::ModelFormat(format!(
                "k = {} does not match {} gate units",
                file.k,
                net.gate_count()
            )));
        }
        if net.sublayer_count() != file.n {
            return Err(Error::ModelFormat(format!(
                "n = {} does not match {} sublayers",
                file.n,
                net.sublayer_count()
            )));
        }
        Ok(net)
    }
}

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SympNetFile {
    schema_version: u32,
    kind: String,
    d: usize,
    h: f64,
    k: usize,
    n: usize,
    activation: Activation,
    units: Vec<UnitFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum UnitFile {
    Linear {
        sublayers: Vec<ShearFile>,
        bias: Vec<f64>,
    },
    Gate {
        side: Side,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct ShearFile {
    side: Side,
    a_raw: Vec<Vec<f64>>,
}

impl PhaseMap for SympNet {
    fn dof(&self) -> usize {
        self.d
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_point(x, 1.0, Dir::Forward)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = 2 * self.d;
        let mut m = vec![0.0; w * w];
        for i in 0..w {
            m[i * w + i] = 1.0;
        }
        self.jacobian_walk(x, 1.0, Dir::Forward, &mut m)?;
        Ok(m)
    }
}

/// Exact inverse of a [`SympNet`], borrowing its parameters.
pub struct SympNetInverse<'a> {
    net: &'a SympNet,
}

impl PhaseMap for SympNetInverse<'_> {
    fn dof(&self) -> usize {
        self.net.d
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.net.eval_point(x, 1.0, Dir::Inverse)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = 2 * self.net.d;
        let mut m = vec![0.0; w * w];
        for i in 0..w {
            m[i * w + i] = 1.0;
        }
        self.net.jacobian_walk(x, 1.0, Dir::Inverse, &mut m)?;
        Ok(m)
    }
}

/// Symmetrized map `Phi_{-h}^{-1} ∘ Phi_h` (for `sign = 1`), borrowing the
/// underlying network's parameters. Flipping the sign evaluates the map at
/// `-h`, which is exactly its inverse.
pub struct SymmetricSympNet<'a> {
    net: &'a SympNet,
    sign: f64,
}

impl SymmetricSympNet<'_> {
    /// The same map at negated step, i.e. the exact inverse.
    pub fn inverse(&self) -> SymmetricSympNet<'_> {
        SymmetricSympNet {
            net: self.net,
            sign: -self.sign,
        }
    }
}

impl PhaseMap for SymmetricSympNet<'_> {
    fn dof(&self) -> usize {
        self.net.d
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mid = self.net.eval_point(x, self.sign, Dir::Forward)?;
        self.net.eval_point(&mid, -self.sign, Dir::Inverse)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = 2 * self.net.d;
        let mut m = vec![0.0; w * w];
        for i in 0..w {
            m[i * w + i] = 1.0;
        }
        let mid = self.net.jacobian_walk(x, self.sign, Dir::Forward, &mut m)?;
        self.net.jacobian_walk(&mid, -self.sign, Dir::Inverse, &mut m)?;
        Ok(m)
    }
}

impl TrainableModel for SympNet {
    fn kind(&self) -> ModelKind {
        ModelKind::SympNet
    }

    fn param_count(&self) -> usize {
        self.units.iter().map(|u| self.unit_param_count(u)).sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for unit in &self.units {
            match unit {
                Unit::Linear(lu) => {
                    for sh in &lu.sublayers {
                        out.extend_from_slice(&sh.a_raw);
                    }
                    out.extend_from_slice(&lu.bias);
                }
                Unit::Gate(g) => {
                    if let Some(s) = g.scale {
                        out.push(s);
                    }
                }
            }
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
        for unit in &mut self.units {
            match unit {
                Unit::Linear(lu) => {
                    for sh in &mut lu.sublayers {
                        let len = sh.a_raw.len();
                        sh.a_raw.copy_from_slice(&params[pos..pos + len]);
                        pos += len;
                    }
                    let len = lu.bias.len();
                    lu.bias.copy_from_slice(&params[pos..pos + len]);
                    pos += len;
                }
                Unit::Gate(g) => {
                    if g.scale.is_some() {
                        g.scale = Some(params[pos]);
                        pos += 1;
                    }
                }
            }
        }
        debug_assert_eq!(pos, params.len());
        Ok(())
    }

    /// Batch MSE; `w_penalty` is ignored because the symplecticity residual
    /// vanishes identically for this architecture.
    fn loss(&self, batch: &Batch, _w_penalty: f64) -> Result<f64> {
        if batch.dof() != self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: batch.dim(),
            });
        }
        let n = batch.len();
        let out = self.forward_slab(batch.xs(), n);
        let mut total = 0.0;
        for (a, b) in out.iter().zip(batch.ys()) {
            let r = a - b;
            total += r * r;
        }
        Ok(total / n as f64)
    }

    /// Batch MSE and its exact analytic gradient. The symmetrization
    /// `(A + A^T)/2` is part of the chain rule, so raw-matrix gradients come
    /// out symmetric. `w_penalty` is ignored (see [`Self::loss`]).
    ///
    /// Coordinates are held in two contiguous `n x d` slabs (momenta and
    /// positions) so every stage is a unit-stride sweep; for d = 1 the inner
    /// dimension collapses and the loops vectorize.
    fn loss_and_grad(&mut self, batch: &Batch, _w_penalty: f64) -> Result<(f64, Vec<f64>)> {
        if batch.dof() != self.d {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.d,
                actual: batch.dim(),
            });
        }
        let n = batch.len();
        let d = self.d;
        let w = 2 * d;
        let h = self.h;
        let activation = self.activation;
        let offsets = self.param_offsets();
        let param_count = self.param_count();
        let shear_count: usize = self
            .units
            .iter()
            .map(|u| match u {
                Unit::Linear(lu) => lu.sublayers.len(),
                Unit::Gate(_) => 0,
            })
            .sum();
        let gate_count = self
            .units
            .iter()
            .filter(|u| matches!(u, Unit::Gate(_)))
            .count();
        self.scratch.ensure(n * d, shear_count, gate_count);
        let Scratch {
            pz,
            qz,
            dp,
            dq,
            shear_srcs,
            gate_sigs,
        } = &mut self.scratch;

        let xs = batch.xs();
        for r in 0..n {
            pz[r * d..(r + 1) * d].copy_from_slice(&xs[r * w..r * w + d]);
            qz[r * d..(r + 1) * d].copy_from_slice(&xs[r * w + d..r * w + w]);
        }

        // Forward pass, caching what backward needs: each shear's read block
        // and each gate's activation values.
        let mut si = 0;
        let mut gi = 0;
        for unit in &self.units {
            match unit {
                Unit::Linear(lu) => {
                    for sh in &lu.sublayers {
                        let eff = sh.scaled_sym(d, h);
                        let (dstv, srcv): (&mut [f64], &[f64]) = match sh.side {
                            Side::Upper => (&mut pz[..], &qz[..]),
                            Side::Lower => (&mut qz[..], &pz[..]),
                        };
                        let cache = &mut shear_srcs[si];
                        cache.copy_from_slice(srcv);
                        shear_apply(dstv, cache, &eff, n, d);
                        si += 1;
                    }
                    if d == 1 {
                        let bp = h * lu.bias[0];
                        let bq = h * lu.bias[1];
                        for v in pz.iter_mut() {
                            *v += bp;
                        }
                        for v in qz.iter_mut() {
                            *v += bq;
                        }
                    } else {
                        for r in 0..n {
                            for i in 0..d {
                                pz[r * d + i] += h * lu.bias[i];
                                qz[r * d + i] += h * lu.bias[d + i];
                            }
                        }
                    }
                }
                Unit::Gate(g) => {
                    let gain = g.scale.unwrap_or(h);
                    let (dstv, srcv): (&mut [f64], &[f64]) = match g.side {
                        Side::Upper => (&mut pz[..], &qz[..]),
                        Side::Lower => (&mut qz[..], &pz[..]),
                    };
                    // Elementwise over the whole slab regardless of d.
                    let sig = &mut gate_sigs[gi];
                    for (s, x) in sig.iter_mut().zip(srcv.iter()) {
                        *s = activation.eval(*x);
                    }
                    for (v, s) in dstv.iter_mut().zip(sig.iter()) {
                        *v += gain * *s;
                    }
                    gi += 1;
                }
            }
        }
        debug_assert!(si == shear_count && gi == gate_count);

        // Loss and its gradient with respect to the network output.
        let ys = batch.ys();
        let inv_n = 1.0 / n as f64;
        let mut loss = 0.0;
        for r in 0..n {
            for i in 0..d {
                let rp = pz[r * d + i] - ys[r * w + i];
                let rq = qz[r * d + i] - ys[r * w + d + i];
                loss += rp * rp + rq * rq;
                dp[r * d + i] = 2.0 * inv_n * rp;
                dq[r * d + i] = 2.0 * inv_n * rq;
            }
        }
        loss *= inv_n;

        // Backward pass in reverse stage order.
        let mut grads = vec![0.0; param_count];
        for (u_idx, unit) in self.units.iter().enumerate().rev() {
            let base = offsets[u_idx];
            match unit {
                Unit::Gate(g) => {
                    let gain = g.scale.unwrap_or(h);
                    gi -= 1;
                    let sig = &gate_sigs[gi];
                    let (ddst, dsrc): (&[f64], &mut [f64]) = match g.side {
                        Side::Upper => (&dp[..], &mut dq[..]),
                        Side::Lower => (&dq[..], &mut dp[..]),
                    };
                    if g.scale.is_some() {
                        let mut gs = 0.0;
                        for (dd, s) in ddst.iter().zip(sig.iter()) {
                            gs += dd * s;
                        }
                        grads[base] = gs;
                    }
                    for idx in 0..n * d {
                        let sp = activation.deriv_from_value(sig[idx]);
                        dsrc[idx] += gain * sp * ddst[idx];
                    }
                }
                Unit::Linear(lu) => {
                    let bias_base = base + lu.sublayers.len() * d * d;
                    for r in 0..n {
                        for i in 0..d {
                            grads[bias_base + i] += h * dp[r * d + i];
                            grads[bias_base + d + i] += h * dq[r * d + i];
                        }
                    }
                    for (s_idx, sh) in lu.sublayers.iter().enumerate().rev() {
                        si -= 1;
                        let srcs = &shear_srcs[si];
                        let eff = sh.scaled_sym(d, h);
                        let (ddst, dsrc): (&[f64], &mut [f64]) = match sh.side {
                            Side::Upper => (&dp[..], &mut dq[..]),
                            Side::Lower => (&dq[..], &mut dp[..]),
                        };
                        // dLoss/dS[i][j] before symmetrization, with the h
                        // scale folded in.
                        let mut g_mat = vec![0.0; d * d];
                        if d == 1 {
                            let mut acc = 0.0;
                            for (dd, s) in ddst.iter().zip(srcs.iter()) {
                                acc += dd * s;
                            }
                            g_mat[0] = acc;
                        } else {
                            for r in 0..n {
                                for i in 0..d {
                                    let dd = ddst[r * d + i];
                                    for j in 0..d {
                                        g_mat[i * d + j] += dd * srcs[r * d + j];
                                    }
                                }
                            }
                        }
                        let a_base = base + s_idx * d * d;
                        for i in 0..d {
                            for j in 0..d {
                                grads[a_base + i * d + j] =
                                    0.5 * h * (g_mat[i * d + j] + g_mat[j * d + i]);
                            }
                        }
                        // eff is symmetric, so the transpose use is implicit.
                        shear_apply(dsrc, ddst, &eff, n, d);
                    }
                }
            }
        }
        debug_assert!(si == 0 && gi == 0);
        Ok((loss, grads))
    }
}

/// dst[r] += eff * src[r] rowwise on `n x d` slabs; d = 1 collapses to a
/// unit-stride axpy.
fn shear_apply(dst: &mut [f64], src: &[f64], eff: &[f64], n: usize, d: usize) {
    if d == 1 {
        let e = eff[0];
        for (v, s) in dst.iter_mut().zip(src.iter()) {
            *v += e * *s;
        }
    } else {
        for r in 0..n {
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += eff[i * d + j] * src[r * d + j];
                }
                dst[r * d + i] += acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_jacobian;
    use crate::phase::SymplecticForm;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_net(d: usize, k: usize, n: usize, h: f64, seed: u64) -> SympNet {
        let cfg = SympNetConfig::new(d, h, k, n);
        SympNet::new(&cfg, &mut rng(seed)).unwrap()
    }

    /// Widens parameters beyond the tiny init so tests exercise generic
    /// parameter values.
    fn randomize_params(net: &mut SympNet, spread: f64, seed: u64) {
        let mut r = rng(seed);
        let params: Vec<f64> = (0..net.param_count())
            .map(|_| r.random_range(-spread..=spread))
            .collect();
        net.set_params(&params).unwrap();
    }

    #[test]
    fn single_upper_shear_pinned() {
        let shear = ShearSublayer::new(Side::Upper, vec![2.0], 1).unwrap();
        let unit = LinearUnit::new(vec![shear], vec![0.0, 0.0], 1).unwrap();
        let net =
            SympNet::from_units(1, 1.0, Activation::Sigmoid, vec![Unit::Linear(unit)]).unwrap();
        assert_eq!(net.apply(&[1.0, 2.0]).unwrap(), vec![5.0, 2.0]);
        assert_eq!(net.inverse().apply(&[5.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn single_lower_gate_pinned() {
        let shear = ShearSublayer::new(Side::Upper, vec![0.0], 1).unwrap();
        let unit = LinearUnit::new(vec![shear], vec![0.0, 0.0], 1).unwrap();
        let gate = GateUnit::new(Side::Lower, None).unwrap();
        let net = SympNet::from_units(
            1,
            1.0,
            Activation::Sigmoid,
            vec![Unit::Linear(unit), Unit::Gate(gate)],
        )
        .unwrap();
        let out = net.apply(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], 0.0);
        assert_relative_eq!(out[1], 0.5);
    }

    #[test]
    fn zero_step_is_identity() {
        for seed in 0..5 {
            let mut net = random_net(2, 3, 3, 0.0, seed);
            randomize_params(&mut net, 2.0, seed + 100);
            let x = [0.3, -0.7, 1.1, 0.4];
            let out = net.apply(&x).unwrap();
            for (a, b) in out.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn parameter_count_formula() {
        // (k+1)(n d^2 + 2d)
        let net = random_net(1, 8, 5, 0.1, 0);
        assert_eq!(net.param_count(), 63);
        assert_eq!(net.params().len(), 63);
        let net = random_net(2, 3, 2, 0.1, 0);
        assert_eq!(net.param_count(), 4 * (2 * 4 + 4));
        // Trainable gate scales add one parameter per gate.
        let mut cfg = SympNetConfig::new(1, 0.1, 8, 5);
        cfg.trainable_gate_scale = true;
        let net = SympNet::new(&cfg, &mut rng(0)).unwrap();
        assert_eq!(net.param_count(), 63 + 8);
    }

    #[test]
    fn canonical_structure_alternates() {
        let net = random_net(1, 3, 4, 0.1, 7);
        let mut gate_sides = Vec::new();
        for unit in net.units() {
            match unit {
                Unit::Gate(g) => gate_sides.push(g.side()),
                Unit::Linear(lu) => {
                    assert_eq!(lu.sublayers()[0].side(), Side::Upper);
                    for pair in lu.sublayers().windows(2) {
                        assert_eq!(pair[0].side(), pair[1].side().other());
                    }
                }
            }
        }
        assert_eq!(gate_sides, vec![Side::Lower, Side::Upper, Side::Lower]);
        assert_eq!(net.units().len(), 7);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        for (seed, d, k, n) in [(1u64, 1usize, 2usize, 3usize), (2, 2, 1, 2), (3, 3, 2, 1)] {
            let mut net = random_net(d, k, n, 0.3, seed);
            randomize_params(&mut net, 1.0, seed + 50);
            let mut r = rng(seed + 77);
            let x: Vec<f64> = (0..2 * d).map(|_| r.random_range(-1.0..1.0)).collect();
            let analytic = net.jacobian(&x).unwrap();
            let fd = fd_jacobian(|z| net.apply(z), &x, 1e-6).unwrap();
            for (a, b) in analytic.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "jacobian mismatch {a} vs {b}");
            }
        }
    }

    #[test]
    fn jacobian_is_symplectic_for_arbitrary_parameters() {
        for (seed, d) in [(1u64, 1usize), (2, 2), (3, 3)] {
            let mut net = random_net(d, 2, 3, 0.4, seed);
            randomize_params(&mut net, 3.0, seed + 9);
            let form = SymplecticForm::new(d);
            let mut r = rng(seed + 13);
            for _ in 0..5 {
                let x: Vec<f64> = (0..2 * d).map(|_| r.random_range(-2.0..2.0)).collect();
                let jac = net.jacobian(&x).unwrap();
                assert!(form.residual(&jac) <= 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, d, k, n, scale) in [
            (1u64, 1usize, 1usize, 1usize, false),
            (2, 1, 2, 3, false),
            (3, 2, 1, 3, false),
            (4, 2, 2, 1, false),
            (5, 1, 2, 2, true),
        ] {
            let mut cfg = SympNetConfig::new(d, 0.2, k, n);
            cfg.trainable_gate_scale = scale;
            let mut net = SympNet::new(&cfg, &mut rng(seed)).unwrap();
            randomize_params(&mut net, 0.8, seed + 21);
            let mut r = rng(seed + 42);
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..7)
                .map(|_| {
                    (
                        (0..2 * d).map(|_| r.random_range(-1.0..1.0)).collect(),
                        (0..2 * d).map(|_| r.random_range(-1.0..1.0)).collect(),
                    )
                })
                .collect();
            let batch = Batch::from_pairs(d, &pairs).unwrap();
            let (_, grads) = net.loss_and_grad(&batch, 0.0).unwrap();

            let params = net.params();
            let eps = 1e-6;
            let mut probe = net.clone();
            for (idx, g) in grads.iter().enumerate() {
                let mut plus = params.clone();
                plus[idx] += eps;
                probe.set_params(&plus).unwrap();
                let lp = probe.loss(&batch, 0.0).unwrap();
                let mut minus = params.clone();
                minus[idx] -= eps;
                probe.set_params(&minus).unwrap();
                let lm = probe.loss(&batch, 0.0).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                let rel = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-8);
                assert!(rel <= 1e-5, "param {idx}: analytic {g} vs fd {fd}");
            }
        }
    }

    #[test]
    fn perfect_fit_is_stationary() {
        let mut net = random_net(1, 2, 2, 0.1, 11);
        randomize_params(&mut net, 0.5, 12);
        let xs: Vec<Vec<f64>> = (0..4).map(|i| vec![0.1 * i as f64, -0.2 * i as f64]).collect();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs
            .iter()
            .map(|x| (x.clone(), net.apply(x).unwrap()))
            .collect();
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let (loss, grads) = net.loss_and_grad(&batch, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn inverse_round_trips() {
        for seed in 0..4 {
            let mut net = random_net(2, 2, 3, 0.3, seed);
            randomize_params(&mut net, 1.5, seed + 30);
            let mut r = rng(seed + 60);
            for _ in 0..10 {
                let x: Vec<f64> = (0..4).map(|_| r.random_range(-1.5..1.5)).collect();
                let y = net.apply(&x).unwrap();
                let back = net.inverse().apply(&y).unwrap();
                for (a, b) in back.iter().zip(&x) {
                    assert!((a - b).abs() <= 1e-10, "roundtrip error {}", (a - b).abs());
                }
            }
        }
    }

    #[test]
    fn symmetric_map_inverts_by_negated_step() {
        let mut net = random_net(1, 2, 3, 0.25, 5);
        randomize_params(&mut net, 1.0, 35);
        let sym = net.symmetric();
        let mut r = rng(65);
        for _ in 0..10 {
            let x: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
            let y = sym.apply(&x).unwrap();
            let back = sym.inverse().apply(&y).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
        // Jacobian of the composition stays symplectic.
        let form = SymplecticForm::new(1);
        let jac = sym.jacobian(&[0.3, -0.4]).unwrap();
        assert!(form.residual(&jac) <= 1e-9);
        // Symmetric map at h = 0 is the identity.
        let mut net0 = random_net(1, 2, 3, 0.0, 6);
        randomize_params(&mut net0, 1.0, 36);
        let out = net0.symmetric().apply(&[0.7, 0.2]).unwrap();
        assert!((out[0] - 0.7).abs() <= 1e-14 && (out[1] - 0.2).abs() <= 1e-14);
    }

    #[test]
    fn symmetric_jacobian_matches_finite_differences() {
        let mut net = random_net(1, 2, 2, 0.3, 8);
        randomize_params(&mut net, 0.9, 48);
        let sym = net.symmetric();
        let x = [0.4, -0.6];
        let analytic = sym.jacobian(&x).unwrap();
        let fd = fd_jacobian(|z| sym.apply(z), &x, 1e-6).unwrap();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn forward_slab_agrees_with_pointwise_apply() {
        let mut net = random_net(2, 2, 3, 0.2, 9);
        randomize_params(&mut net, 1.2, 49);
        let mut r = rng(99);
        let xs: Vec<f64> = (0..6 * 4).map(|_| r.random_range(-1.0..1.0)).collect();
        let slab = net.forward_slab(&xs, 6);
        for i in 0..6 {
            let point = net.apply(&xs[i * 4..(i + 1) * 4]).unwrap();
            assert_eq!(&slab[i * 4..(i + 1) * 4], point.as_slice());
        }
    }

    #[test]
    fn composition_equals_sequential_forwards() {
        let mut a = random_net(1, 1, 2, 0.2, 14);
        let mut b = random_net(1, 2, 2, 0.2, 15);
        randomize_params(&mut a, 1.0, 24);
        randomize_params(&mut b, 1.0, 25);
        let ab = a.compose(&b).unwrap();
        let x = [0.3, 0.9];
        let seq = b.apply(&a.apply(&x).unwrap()).unwrap();
        let joint = ab.apply(&x).unwrap();
        assert_eq!(seq, joint);
        // Mismatched h is rejected.
        let c = random_net(1, 1, 2, 0.3, 16);
        assert!(a.compose(&c).is_err());
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let mut net = random_net(2, 3, 2, 0.1, 17);
        randomize_params(&mut net, 1.0, 27);
        let text = net.to_json().unwrap();
        let back = SympNet::from_json(&text).unwrap();
        assert_eq!(net, back);
        assert_eq!(net.params(), back.params());

        // The 63-parameter configuration serializes all 63 values.
        let net63 = random_net(1, 8, 5, 0.1, 18);
        let back63 = SympNet::from_json(&net63.to_json().unwrap()).unwrap();
        assert_eq!(back63.params().len(), 63);
        assert_eq!(net63.params(), back63.params());
    }

    #[test]
    fn malformed_json_is_an_error() {
        let net = random_net(1, 1, 1, 0.1, 19);
        let text = net.to_json().unwrap();
        let truncated = &text[..text.len() / 2];
        assert!(SympNet::from_json(truncated).is_err());
        assert!(SympNet::from_json("{}").is_err());
        let wrong_kind = text.replace("\"sympnet\"", "\"fnn\"");
        assert!(matches!(
            SympNet::from_json(&wrong_kind),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn set_params_validates() {
        let mut net = random_net(1, 1, 1, 0.1, 20);
        assert!(net.set_params(&[0.0; 3]).is_err());
        let n = net.param_count();
        let mut p = vec![0.0; n];
        p[0] = f64::NAN;
        assert!(net.set_params(&p).is_err());
        let good: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        net.set_params(&good).unwrap();
        assert_eq!(net.params(), good);
    }

    #[test]
    fn config_validation() {
        assert!(SympNet::new(&SympNetConfig::new(0, 0.1, 1, 1), &mut rng(0)).is_err());
        assert!(SympNet::new(&SympNetConfig::new(1, 0.1, 1, 0), &mut rng(0)).is_err());
        assert!(SympNet::new(&SympNetConfig::new(1, f64::NAN, 1, 1), &mut rng(0)).is_err());
        // k = 0 is a single linear unit.
        let net = SympNet::new(&SympNetConfig::new(1, 0.1, 0, 2), &mut rng(0)).unwrap();
        assert_eq!(net.units().len(), 1);
        assert_eq!(net.param_count(), 4);
    }

    #[test]
    fn mismatched_input_dimension_is_rejected() {
        let mut net = random_net(2, 1, 1, 0.1, 21);
        assert!(net.apply(&[1.0, 2.0]).is_err());
        let batch = Batch::new(1, vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert!(net.loss(&batch, 0.0).is_err());
        assert!(net.loss_and_grad(&batch, 0.0).is_err());
    }
}
