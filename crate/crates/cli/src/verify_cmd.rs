//! `verify`: geometric checks with optional pass/fail thresholds.
//!
//! Exit code 3 signals a requested threshold was violated; the report files
//! are still written so the failure can be inspected.

use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use sympflow::model::rollout_map;
use sympflow::sympnet::SympNetConfig;
use sympflow::verify::{drift_to_csv, energy_drift, gradient_check, symplectic_residual};
use sympflow::{Batch, Dataset, Fnn, ModelKind, SympNet, System};

use crate::common::{
    parse_point, pick, pick_opt, pick_required, runtime, threshold_violation, usage, write_file,
    AnyModel, CliResult,
};
use crate::config;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// What to verify: symplectic | gradients | energy.
    #[arg(long)]
    check: Option<String>,
    /// Trained model JSON (symplectic and energy checks; optional for
    /// gradients, which can use a built-in fixture).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fixture family for --check gradients: sympnet | fnn.
    #[arg(long)]
    model_kind: Option<String>,
    /// Probe point count.
    #[arg(long)]
    points: Option<usize>,
    /// Pass/fail bound; omitted means report-only (always exit 0).
    #[arg(long)]
    threshold: Option<f64>,
    /// RNG seed for probe points and fixtures.
    #[arg(long)]
    seed: Option<u64>,
    /// System providing the probe box / energy function.
    #[arg(long)]
    system: Option<String>,
    /// Dataset CSV: supplies the system and (for energy) the start point.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Start "p1,..,q1,.." for the energy check.
    #[arg(long)]
    start: Option<String>,
    /// Rollout length for the energy check.
    #[arg(long)]
    steps: Option<usize>,
    /// Finite-difference step for the gradient check.
    #[arg(long)]
    eps: Option<f64>,
    /// Per-point report CSV path.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifyFileConfig {
    check: Option<String>,
    model: Option<PathBuf>,
    model_kind: Option<String>,
    points: Option<usize>,
    threshold: Option<f64>,
    seed: Option<u64>,
    system: Option<String>,
    data: Option<PathBuf>,
    start: Option<String>,
    steps: Option<usize>,
    eps: Option<f64>,
    out_csv: Option<PathBuf>,
    out_json: Option<PathBuf>,
}

/// Uniform probe points, from the system's sampling box when one is known
/// and from [-1, 1]^2d otherwise.
pub fn probe_points(d: usize, count: usize, system: Option<System>, seed: u64) -> Vec<Vec<f64>> {
    let (lower, upper) = match system {
        Some(s) => s.default_box(),
        None => (vec![-1.0; 2 * d], vec![1.0; 2 * d]),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            lower
                .iter()
                .zip(&upper)
                .map(|(lo, hi)| rng.random_range(*lo..*hi))
                .collect()
        })
        .collect()
}

pub fn run(args: VerifyArgs, config_path: Option<&Path>) -> CliResult<()> {
    let file: VerifyFileConfig = config::load(config_path)?;
    let check = pick_required(args.check, file.check, "check")?;
    let dataset = pick_opt(args.data, file.data)
        .map(|p| Dataset::load(&p))
        .transpose()?;
    let system = match pick_opt(args.system, file.system) {
        Some(name) => Some(System::from_name(&name).map_err(|e| usage(e.to_string()))?),
        None => dataset.as_ref().map(|ds| ds.meta().system),
    };
    let seed = pick(args.seed, file.seed, 1);
    let threshold = pick_opt(args.threshold, file.threshold);
    let out_csv = pick_opt(args.out_csv, file.out_csv);
    let out_json = pick_opt(args.out_json, file.out_json);

    match check.as_str() {
        "symplectic" => {
            let model_path = pick_required(args.model, file.model, "model")?;
            let model = AnyModel::load(&model_path)?;
            let count = pick(args.points, file.points, 100);
            let points = probe_points(model.dof(), count, system, seed);
            let report = symplectic_residual(model.phase_map(), &points)?;
            if let Some(path) = out_csv {
                write_file(&path, &report.to_csv())?;
            }
            if let Some(path) = out_json {
                write_file(&path, &report.summary_json()?)?;
            }
            println!("check=symplectic");
            println!("points={count}");
            println!("max_residual={}", report.max_residual);
            println!("mean_residual={}", report.mean_residual);
            if let Some(bound) = threshold {
                if report.max_residual > bound {
                    return Err(threshold_violation(format!(
                        "max symplectic residual {} exceeds threshold {bound}",
                        report.max_residual
                    )));
                }
                println!("threshold={bound} status=pass");
            }
            Ok(())
        }
        "gradients" => {
            let eps = pick(args.eps, file.eps, 1e-6);
            let bound = threshold.unwrap_or(1e-5);
            let count = pick(args.points, file.points, 10);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Fixture batch: random pairs; gradients need no consistent map.
            let make_batch = |d: usize, rng: &mut ChaCha8Rng| -> CliResult<Batch> {
                let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
                    .map(|_| {
                        (
                            (0..2 * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                            (0..2 * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                        )
                    })
                    .collect();
                Ok(Batch::from_pairs(d, &pairs)?)
            };
            let worst = match (pick_opt(args.model, file.model), pick_opt(args.model_kind, file.model_kind)) {
                (Some(path), _) => {
                    let model = AnyModel::load(&path)?;
                    let batch = make_batch(model.dof(), &mut rng)?;
                    match model {
                        AnyModel::SympNet(m) => gradient_check(&m, &batch, 0.0, eps)?,
                        AnyModel::Fnn(m) => gradient_check(&m, &batch, 0.0, eps)?,
                    }
                }
                (None, Some(kind_name)) => {
                    let kind =
                        ModelKind::from_name(&kind_name).map_err(|e| usage(e.to_string()))?;
                    let batch = make_batch(1, &mut rng)?;
                    match kind {
                        ModelKind::SympNet => {
                            let net =
                                SympNet::new(&SympNetConfig::new(1, 0.1, 3, 2), &mut rng)?;
                            gradient_check(&net, &batch, 0.0, eps)?
                        }
                        ModelKind::Fnn => {
                            let net = Fnn::new(1, &[5, 5], &mut rng)?;
                            gradient_check(&net, &batch, 0.0, eps)?
                        }
                    }
                }
                (None, None) => {
                    return Err(usage("--check gradients needs --model or --model-kind"))
                }
            };
            println!("check=gradients");
            println!("eps={eps}");
            println!("worst_rel_error={worst}");
            if worst > bound {
                return Err(threshold_violation(format!(
                    "gradient mismatch {worst} exceeds threshold {bound}"
                )));
            }
            println!("threshold={bound} status=pass");
            Ok(())
        }
        "energy" => {
            let model_path = pick_required(args.model, file.model, "model")?;
            let model = AnyModel::load(&model_path)?;
            let system =
                system.ok_or_else(|| usage("--check energy needs --system or --data"))?;
            let start_flag = pick_opt(args.start, file.start);
            let x0 = match (&start_flag, &dataset) {
                (Some(s), _) => parse_point(s)?,
                (None, Some(ds)) => ds.final_point(),
                (None, None) => return Err(usage("--check energy needs --start or --data")),
            };
            let steps = pick(args.steps, file.steps, 1000);
            let roll = rollout_map(model.phase_map(), &x0, steps);
            if let Some(e) = &roll.error {
                return Err(runtime(format!(
                    "model rollout failed after {} steps: {e}",
                    roll.states.len() - 1
                )));
            }
            let (series, max_abs) = energy_drift(system, &roll.states)?;
            if let Some(path) = out_csv {
                write_file(&path, &drift_to_csv(&series))?;
            }
            println!("check=energy");
            println!("steps={steps}");
            println!("max_drift={max_abs}");
            if let Some(bound) = threshold {
                if max_abs > bound {
                    return Err(threshold_violation(format!(
                        "max energy drift {max_abs} exceeds threshold {bound}"
                    )));
                }
                println!("threshold={bound} status=pass");
            }
            Ok(())
        }
        other => Err(usage(format!(
            "unknown check {other:?}; expected symplectic, gradients or energy"
        ))),
    }
}
