//! Flow-map datasets: generation and CSV (de)serialization.
//!
//! A dataset is a list of pairs `(x, y)` with `y = phi_h(x)` under a
//! reference integrator, plus the metadata needed to regenerate it. Two
//! sources exist:
//!
//! * box sampling: initial points drawn uniformly from an axis-aligned box,
//! * trajectory sampling: consecutive states of one orbit, so `y_k = x_{k+1}`.
//!
//! Sample `i` of a box dataset draws from RNG stream `i` (ChaCha8 with the
//! dataset seed as the key), so datasets with the same seed share a common
//! prefix regardless of length, and a resample caused by an integrator
//! failure never shifts later samples.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrators::{rollout, step, IntegratorConfig};
use crate::model::Batch;
use crate::phase::System;

/// Axis-aligned sampling region, strict on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SampleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() || !lower.len().is_multiple_of(2) {
            return Err(Error::invalid("box dimension must be positive and even"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "box needs finite lower < upper on every axis, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v < hi)
    }
}

/// How the initial points of a dataset were produced.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Box { domain: SampleBox, seed: u64 },
    Trajectory { x0: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub system: System,
    pub h: f64,
    pub integ: IntegratorConfig,
    pub source: DataSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    meta: DatasetMeta,
    batch: Batch,
}

/// Redraws per sample before giving up on a box that keeps producing
/// integrator failures.
const MAX_REDRAWS: usize = 8;

impl Dataset {
    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn batch(&self) -> &Batch {
        &self.batch
    }

    pub fn len(&self) -> usize {
        self.batch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batch.is_empty()
    }

    /// Endpoint of the last pair; for a trajectory dataset this is the final
    /// state x_n, the natural start for a continuation rollout.
    pub fn final_point(&self) -> Vec<f64> {
        self.batch.y(self.batch.len() - 1).to_vec()
    }

    /// Uniform draws from `domain`, each mapped one step h forward.
    pub fn sample_box(
        system: System,
        domain: &SampleBox,
        n: usize,
        h: f64,
        integ: &IntegratorConfig,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dataset size must be >= 1"));
        }
        if domain.dim() != 2 * system.dof() {
            return Err(Error::DimensionMismatch {
                expected: 2 * system.dof(),
                actual: domain.dim(),
            });
        }
        integ.validate()?;
        if !h.is_finite() {
            return Err(Error::invalid("step h must be finite"));
        }
        let dim = domain.dim();
        let mut xs = Vec::with_capacity(n * dim);
        let mut ys = Vec::with_capacity(n * dim);
        let mut x = vec![0.0; dim];
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut last_err = None;
            let mut done = false;
            for _ in 0..=MAX_REDRAWS {
                for (v, (lo, hi)) in x
                    .iter_mut()
                    .zip(domain.lower.iter().zip(&domain.upper))
                {
                    *v = rng.random_range(*lo..*hi);
                }
                match step(system, &x, h, integ) {
                    Ok(y) => {
                        xs.extend_from_slice(&x);
                        ys.extend_from_slice(&y);
                        done = true;
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            if !done {
                return Err(Error::invalid(format!(
                    "sample {i}: integrator failed {} times in a row, last error: {}",
                    MAX_REDRAWS + 1,
                    last_err.expect("at least one failure")
                )));
            }
        }
        let batch = Batch::new(system.dof(), xs, ys)?;
        Ok(Self {
            meta: DatasetMeta {
                system,
                h,
                integ: *integ,
                source: DataSource::Box {
                    domain: domain.clone(),
                    seed,
                },
            },
            batch,
        })
    }

    /// Consecutive pairs of a single orbit started at `x0`.
    pub fn sample_trajectory(
        system: System,
        x0: &[f64],
        n: usize,
        h: f64,
        integ: &IntegratorConfig,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dataset size must be >= 1"));
        }
        let states = rollout(system, x0, h, n, integ).into_result()?;
        let dim = x0.len();
        let mut xs = Vec::with_capacity(n * dim);
        let mut ys = Vec::with_capacity(n * dim);
        for k in 0..n {
            xs.extend_from_slice(&states[k]);
            ys.extend_from_slice(&states[k + 1]);
        }
        let batch = Batch::new(system.dof(), xs, ys)?;
        Ok(Self {
            meta: DatasetMeta {
                system,
                h,
                integ: *integ,
                source: DataSource::Trajectory { x0: x0.to_vec() },
            },
            batch,
        })
    }

    /// CSV with `# key=value` metadata, a header `x1..x2d,y1..y2d` and one
    /// row per pair. Floats print in shortest round-trip form, so a
    /// save/load cycle is lossless.
    pub fn to_csv(&self) -> String {
        let d = self.batch.dof();
        let dim = 2 * d;
        let mut out = String::new();
        let _ = writeln!(out, "# system={}", self.meta.system.name());
        let _ = writeln!(out, "# d={d}");
        let _ = writeln!(out, "# h={}", self.meta.h);
        let _ = writeln!(out, "# n={}", self.batch.len());
        let _ = writeln!(out, "# scheme={}", self.meta.integ.scheme.name());
        let _ = writeln!(out, "# substeps={}", self.meta.integ.substeps);
        let _ = writeln!(out, "# fp_tol={}", self.meta.integ.fp_tol);
        let _ = writeln!(out, "# fp_max_iter={}", self.meta.integ.fp_max_iter);
        match &self.meta.source {
            DataSource::Box { domain, seed } => {
                let _ = writeln!(out, "# kind=box");
                let _ = writeln!(out, "# seed={seed}");
                let _ = writeln!(out, "# lower={}", join_floats(&domain.lower));
                let _ = writeln!(out, "# upper={}", join_floats(&domain.upper));
            }
            DataSource::Trajectory { x0 } => {
                let _ = writeln!(out, "# kind=trajectory");
                let _ = writeln!(out, "# x0={}", join_floats(x0));
            }
        }
        for i in 1..=dim {
            let _ = write!(out, "x{i},");
        }
        for i in 1..=dim {
            let _ = write!(out, "y{i}{}", if i == dim { "\n" } else { "," });
        }
        for r in 0..self.batch.len() {
            let _ = writeln!(
                out,
                "{},{}",
                join_floats(self.batch.x(r)),
                join_floats(self.batch.y(r))
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut header: Option<(usize, Vec<&str>)> = None;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut dim = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if header.is_none() {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 4 || !cols.len().is_multiple_of(4) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "header must list x1..x2d,y1..y2d, got {} columns",
                            cols.len()
                        ),
                    });
                }
                dim = cols.len() / 2;
                for (c, col) in cols.iter().enumerate() {
                    let expect = if c < dim {
                        format!("x{}", c + 1)
                    } else {
                        format!("y{}", c - dim + 1)
                    };
                    if *col != expect {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected column {expect}, got {col}"),
                        });
                    }
                }
                header = Some((line_no, cols));
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 * dim {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} fields, got {}", 2 * dim, fields.len()),
                });
            }
            for (c, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad float {field:?}: {e}"),
                })?;
                if c < dim {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        let Some((header_line, _)) = header else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: "no header line found; dataset is empty".to_string(),
            });
        };
        if xs.is_empty() {
            return Err(Error::Parse {
                line: header_line,
                message: "dataset has a header but no samples".to_string(),
            });
        }

        let need = |key: &str| -> Result<&String> {
            meta.get(key)
                .ok_or_else(|| Error::invalid(format!("missing metadata key {key}")))
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            need(key)?
                .parse()
                .map_err(|e| Error::invalid(format!("metadata {key}: {e}")))
        };
        let parse_usize = |key: &str| -> Result<usize> {
            need(key)?
                .parse()
                .map_err(|e| Error::invalid(format!("metadata {key}: {e}")))
        };
        let system = System::from_name(need("system")?)?;
        let d = parse_usize("d")?;
        if 2 * d != dim {
            return Err(Error::invalid(format!(
                "metadata d={d} disagrees with {dim} coordinate columns"
            )));
        }
        let integ = IntegratorConfig {
            scheme: crate::integrators::Scheme::from_name(need("scheme")?)?,
            substeps: parse_usize("substeps")?,
            fp_tol: parse_f64("fp_tol")?,
            fp_max_iter: parse_usize("fp_max_iter")?,
        };
        integ.validate()?;
        let source = match need("kind")?.as_str() {
            "box" => DataSource::Box {
                domain: SampleBox::new(
                    parse_floats(need("lower")?)?,
                    parse_floats(need("upper")?)?,
                )?,
                seed: need("seed")?
                    .parse()
                    .map_err(|e| Error::invalid(format!("metadata seed: {e}")))?,
            },
            "trajectory" => DataSource::Trajectory {
                x0: parse_floats(need("x0")?)?,
            },
            other => return Err(Error::invalid(format!("unknown dataset kind {other:?}"))),
        };
        let batch = Batch::new(d, xs, ys)?;
        Ok(Self {
            meta: DatasetMeta {
                system,
                h: parse_f64("h")?,
                integ,
                source,
            },
            batch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse()
                .map_err(|e| Error::invalid(format!("bad float {f:?}: {e}")))
        })
        .collect()
}
