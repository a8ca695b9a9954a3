//! `exp` subcommand: canned end-to-end experiments. Each preset generates
//! data, trains one or both model families, rolls the trained maps out far
//! beyond the training horizon, checks symplecticity, and writes a manifest
//! tying the artifacts together.
//!
//! Stage order is fixed; the first failure is recorded and the remaining
//! stages are skipped, but the manifest is always written.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sympflow::model::rollout_map;
use sympflow::sympnet::SympNetConfig;
use sympflow::train::history_to_csv;
use sympflow::verify::{energy_drift, symplectic_residual};
use sympflow::{
    Dataset, Fnn, IntegratorConfig, PhaseMap, SampleBox, SympNet, System, TrainConfig,
    TrainReport, TrainSession, TrainableModel,
};

use crate::common::{self, pick, runtime, usage, CliResult};
use crate::config;
use crate::manifest::{
    Manifest, ModelMetrics, ResolvedConfig, StageRecord, StageStatus, SymplecticityTrend,
};

pub const PRESET_NAMES: [&str; 5] = [
    "solve-pendulum",
    "solve-lv",
    "predict-pendulum",
    "predict-lv",
    "predict-kepler",
];

const DEFAULT_ROLLOUT_STEPS: usize = 1000;
/// Epoch at which the FNN's symplecticity defect is first measured.
const TREND_EPOCH: usize = 100;
/// Probe points used for the symplecticity check.
const VERIFY_POINTS: usize = 100;

#[derive(Args, Debug)]
pub struct ExpArgs {
    /// Experiment preset (see `--help` for the list).
    pub preset: Option<String>,
    /// Output directory; defaults to `exp-<preset>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base RNG seed; data, test data and model inits derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs for every model.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Train for 1e6 epochs instead of the 1e5 default.
    #[arg(long)]
    pub paper_scale: bool,
    /// Override the preset's sample count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the rollout length.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Override the preset's learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Loss history granularity in epochs.
    #[arg(long)]
    pub log_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ExpFileConfig {
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
    paper_scale: Option<bool>,
    n: Option<usize>,
    steps: Option<usize>,
    lr: Option<f64>,
    log_every: Option<usize>,
}

enum Task {
    /// Independent pairs sampled from a box; a held-out test set is drawn
    /// from the same box with a different seed.
    Solve { lower: Vec<f64>, upper: Vec<f64> },
    /// One trajectory; the rollout continues from its final point.
    Predict { x0: Vec<f64> },
}

impl Task {
    fn name(&self) -> &'static str {
        match self {
            Task::Solve { .. } => "solve",
            Task::Predict { .. } => "predict",
        }
    }
}

struct Preset {
    system: System,
    task: Task,
    n: usize,
    h: f64,
    lr: f64,
    /// Rollout start points for solve tasks; predict tasks start from the
    /// end of the training trajectory.
    starts: Vec<Vec<f64>>,
    both_models: bool,
}

fn preset(name: &str) -> CliResult<Preset> {
    match name {
        "solve-pendulum" => Ok(Preset {
            system: System::Pendulum,
            task: Task::Solve {
                lower: vec![-SQRT_2, -FRAC_PI_2],
                upper: vec![SQRT_2, FRAC_PI_2],
            },
            n: 10_000,
            h: 0.1,
            lr: 0.1,
            starts: vec![vec![0.0, 0.5], vec![0.0, 1.0], vec![0.0, 1.5]],
            both_models: true,
        }),
        "solve-lv" => Ok(Preset {
            system: System::LotkaVolterra,
            task: Task::Solve {
                lower: vec![-2.0, -0.5],
                upper: vec![1.5, 2.0],
            },
            n: 10_000,
            h: 0.1,
            lr: 0.1,
            starts: vec![vec![0.0, 1.0], vec![0.0, 1.25], vec![0.0, 1.5]],
            both_models: true,
        }),
        "predict-pendulum" => Ok(Preset {
            system: System::Pendulum,
            task: Task::Predict { x0: vec![0.0, 1.0] },
            n: 40,
            h: 0.1,
            lr: 0.01,
            starts: Vec::new(),
            both_models: true,
        }),
        "predict-lv" => Ok(Preset {
            system: System::LotkaVolterra,
            task: Task::Predict { x0: vec![0.0, 1.0] },
            n: 25,
            h: 0.1,
            lr: 0.01,
            starts: Vec::new(),
            both_models: true,
        }),
        "predict-kepler" => Ok(Preset {
            system: System::Kepler,
            task: Task::Predict {
                x0: vec![1.0, 0.0, 0.0, 1.0],
            },
            n: 40,
            h: 0.1,
            lr: 0.01,
            starts: Vec::new(),
            both_models: false,
        }),
        other => Err(usage(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Sequential stage runner. After a failure every later stage is recorded
/// as skipped without running.
struct Stages {
    records: Vec<StageRecord>,
    failed: bool,
}

impl Stages {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            failed: false,
        }
    }

    fn run<T>(&mut self, name: &str, f: impl FnOnce(&mut Vec<String>) -> CliResult<T>) -> Option<T> {
        if self.failed {
            println!("stage={name} status=skipped");
            self.records.push(StageRecord {
                name: name.to_string(),
                status: StageStatus::Skipped,
                error: None,
                outputs: Vec::new(),
            });
            return None;
        }
        let mut outputs = Vec::new();
        match f(&mut outputs) {
            Ok(value) => {
                println!("stage={name} status=ok");
                self.records.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Ok,
                    error: None,
                    outputs,
                });
                Some(value)
            }
            Err(e) => {
                println!("stage={name} status=failed error={}", e.message);
                self.failed = true;
                self.records.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Failed,
                    error: Some(e.message),
                    outputs,
                });
                None
            }
        }
    }
}

struct Trained<M> {
    report: TrainReport<M>,
    test_mse: Option<f64>,
    trend: Option<SymplecticityTrend>,
}

/// Writes the best model, its loss history, and computes held-out MSE.
fn save_trained<M: TrainableModel + ModelJson>(
    label: &str,
    report: &TrainReport<M>,
    test: Option<&Dataset>,
    out_dir: &Path,
    outs: &mut Vec<String>,
) -> CliResult<Option<f64>> {
    let model_rel = format!("models/{label}.json");
    common::write_file(&out_dir.join(&model_rel), &report.model.to_json_string()?)?;
    outs.push(model_rel);
    let loss_rel = format!("reports/{label}-loss.csv");
    common::write_file(&out_dir.join(&loss_rel), &history_to_csv(&report.history))?;
    outs.push(loss_rel);
    match test {
        Some(t) => Ok(Some(report.model.loss(t.batch(), 0.0)?)),
        None => Ok(None),
    }
}

/// Unifies the two families' serializers for [`save_trained`].
trait ModelJson {
    fn to_json_string(&self) -> sympflow::Result<String>;
}

impl ModelJson for SympNet {
    fn to_json_string(&self) -> sympflow::Result<String> {
        self.to_json()
    }
}

impl ModelJson for Fnn {
    fn to_json_string(&self) -> sympflow::Result<String> {
        self.to_json()
    }
}

/// What every rollout in one experiment shares: the reference system, the
/// step size and the horizon.
struct RolloutPlan<'a> {
    system: System,
    h: f64,
    steps: usize,
    integ: &'a IntegratorConfig,
}

/// Rolls `map` out from every start, writes one CSV per start, and returns
/// the largest energy drift seen across them.
fn rollout_stage(
    label: &str,
    map: &dyn PhaseMap,
    starts: &[Vec<f64>],
    plan: &RolloutPlan<'_>,
    out_dir: &Path,
    outs: &mut Vec<String>,
) -> CliResult<f64> {
    let mut max_drift = 0.0f64;
    for (i, x0) in starts.iter().enumerate() {
        let csv = crate::rollout::rollout_csv(
            map,
            x0,
            plan.steps,
            Some((plan.system, plan.h, plan.integ)),
            Some(plan.system),
        )?;
        let rel = format!("rollouts/{label}-start{i}.csv");
        common::write_file(&out_dir.join(&rel), &csv)?;
        outs.push(rel);
        let states = rollout_map(map, x0, plan.steps).into_result()?;
        let (_, drift) = energy_drift(plan.system, &states)?;
        max_drift = max_drift.max(drift);
    }
    Ok(max_drift)
}

/// Checks `M^T J M = J` on held-out inputs (training inputs when no test
/// set exists) and writes the residual report.
fn verify_stage(
    label: &str,
    map: &dyn PhaseMap,
    train: &Dataset,
    test: Option<&Dataset>,
    out_dir: &Path,
    outs: &mut Vec<String>,
) -> CliResult<f64> {
    let batch = test.map(|t| t.batch()).unwrap_or_else(|| train.batch());
    let count = batch.len().min(VERIFY_POINTS);
    let points: Vec<Vec<f64>> = (0..count).map(|i| batch.x(i).to_vec()).collect();
    let report = symplectic_residual(map, &points)?;
    let csv_rel = format!("reports/{label}-symplectic.csv");
    common::write_file(&out_dir.join(&csv_rel), &report.to_csv())?;
    outs.push(csv_rel);
    let json_rel = format!("reports/{label}-symplectic.json");
    common::write_file(&out_dir.join(&json_rel), &report.summary_json()?)?;
    outs.push(json_rel);
    Ok(report.max_residual)
}

pub fn run(args: ExpArgs, config_path: Option<&Path>) -> CliResult<()> {
    let file: ExpFileConfig = config::load(config_path)?;
    let name = match args.preset.or(file.preset) {
        Some(n) => n,
        None => {
            return Err(usage(format!(
                "missing preset; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let preset = preset(&name)?;
    let seed = pick(args.seed, file.seed, 1);
    let paper_scale = args.paper_scale || file.paper_scale.unwrap_or(false);
    let epochs = crate::train::effective_epochs(args.epochs.or(file.epochs), paper_scale)?;
    let n = pick(args.n, file.n, preset.n);
    let steps = pick(args.steps, file.steps, DEFAULT_ROLLOUT_STEPS);
    let lr = pick(args.lr, file.lr, preset.lr);
    let log_every = pick(args.log_every, file.log_every, 100);
    let out_dir = args
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("exp-{name}")));

    let train_cfg = TrainConfig {
        epochs,
        lr,
        w_penalty: 0.0,
        log_every,
    };
    train_cfg.validate().map_err(|e| usage(e.to_string()))?;
    let integ = IntegratorConfig::default();
    let d = preset.system.dof();

    println!("experiment={name}");
    println!("out={}", common::rel_display(&out_dir));

    let mut stages = Stages::new();

    let datasets = stages.run("generate", |outs| {
        let (train, test) = match &preset.task {
            Task::Solve { lower, upper } => {
                let domain = SampleBox::new(lower.clone(), upper.clone())?;
                let train = Dataset::sample_box(preset.system, &domain, n, preset.h, &integ, seed)?;
                let test =
                    Dataset::sample_box(preset.system, &domain, n, preset.h, &integ, seed + 1)?;
                (train, Some(test))
            }
            Task::Predict { x0 } => {
                let train = Dataset::sample_trajectory(preset.system, x0, n, preset.h, &integ)?;
                (train, None)
            }
        };
        common::write_file(&out_dir.join("dataset/train.csv"), &train.to_csv())?;
        outs.push("dataset/train.csv".to_string());
        if let Some(t) = &test {
            common::write_file(&out_dir.join("dataset/test.csv"), &t.to_csv())?;
            outs.push("dataset/test.csv".to_string());
        }
        Ok((train, test))
    });

    let sympnet = stages.run("train-sympnet", |outs| {
        let (train, test) = datasets.as_ref().expect("generate stage produced data");
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let cfg = SympNetConfig::new(d, preset.h, 8, 5);
        let model = SympNet::new(&cfg, &mut rng)?;
        let report = sympflow::train(model, train.batch(), &train_cfg)?;
        let test_mse = save_trained("sympnet", &report, test.as_ref(), &out_dir, outs)?;
        println!(
            "  sympnet params={} best_loss={:e} best_epoch={}",
            report.model.param_count(),
            report.best_loss,
            report.best_epoch
        );
        Ok(Trained {
            report,
            test_mse,
            trend: None,
        })
    });

    let fnn = if preset.both_models {
        stages.run("train-fnn", |outs| {
            let (train, test) = datasets.as_ref().expect("generate stage produced data");
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
            let model = Fnn::baseline(d, &mut rng)?;
            let mut session = TrainSession::new(model, train.batch().clone(), train_cfg.clone())?;
            // The defect of an unconstrained net shrinks as it fits a
            // symplectic target; measure it early and late to show that.
            let trend = match (test.as_ref(), epochs > TREND_EPOCH) {
                (Some(t), true) => {
                    session.run_epochs(TREND_EPOCH)?;
                    let early = session.model().symplecticity_mse(t.batch())?;
                    session.run_epochs(epochs - TREND_EPOCH)?;
                    let fin = session.model().symplecticity_mse(t.batch())?;
                    Some(SymplecticityTrend {
                        epoch_early: TREND_EPOCH,
                        mse_s_early: early,
                        mse_s_final: fin,
                    })
                }
                _ => {
                    session.run_epochs(epochs)?;
                    None
                }
            };
            let report = session.finish()?;
            let test_mse = save_trained("fnn", &report, test.as_ref(), &out_dir, outs)?;
            println!(
                "  fnn params={} best_loss={:e} best_epoch={}",
                report.model.param_count(),
                report.best_loss,
                report.best_epoch
            );
            Ok(Trained {
                report,
                test_mse,
                trend,
            })
        })
    } else {
        None
    };

    // Predict tasks roll out from where the training trajectory ended.
    let starts: Vec<Vec<f64>> = match (&preset.task, &datasets) {
        (Task::Solve { .. }, _) => preset.starts.clone(),
        (Task::Predict { .. }, Some((train, _))) => vec![train.final_point()],
        (Task::Predict { .. }, None) => Vec::new(),
    };

    let plan = RolloutPlan {
        system: preset.system,
        h: preset.h,
        steps,
        integ: &integ,
    };
    let sympnet_drift = stages.run("rollout-sympnet", |outs| {
        let trained = sympnet.as_ref().expect("sympnet training succeeded");
        rollout_stage("sympnet", &trained.report.model, &starts, &plan, &out_dir, outs)
    });

    let fnn_drift = if preset.both_models {
        stages.run("rollout-fnn", |outs| {
            let trained = fnn.as_ref().expect("fnn training succeeded");
            rollout_stage("fnn", &trained.report.model, &starts, &plan, &out_dir, outs)
        })
    } else {
        None
    };

    let sympnet_residual = stages.run("verify-sympnet", |outs| {
        let trained = sympnet.as_ref().expect("sympnet training succeeded");
        let (train, test) = datasets.as_ref().expect("generate stage produced data");
        verify_stage(
            "sympnet",
            &trained.report.model,
            train,
            test.as_ref(),
            &out_dir,
            outs,
        )
    });

    let fnn_residual = if preset.both_models {
        stages.run("verify-fnn", |outs| {
            let trained = fnn.as_ref().expect("fnn training succeeded");
            let (train, test) = datasets.as_ref().expect("generate stage produced data");
            verify_stage(
                "fnn",
                &trained.report.model,
                train,
                test.as_ref(),
                &out_dir,
                outs,
            )
        })
    } else {
        None
    };

    let mut metrics = BTreeMap::new();
    let mut sn_metrics = ModelMetrics::default();
    if let Some(t) = &sympnet {
        sn_metrics.params = Some(t.report.model.param_count());
        sn_metrics.train_mse = Some(t.report.best_loss);
        sn_metrics.test_mse = t.test_mse;
        sn_metrics.best_epoch = Some(t.report.best_epoch);
    }
    sn_metrics.max_energy_drift = sympnet_drift;
    sn_metrics.max_symplectic_residual = sympnet_residual;
    metrics.insert("sympnet".to_string(), sn_metrics);
    if preset.both_models {
        let mut f_metrics = ModelMetrics::default();
        if let Some(t) = fnn {
            f_metrics.params = Some(t.report.model.param_count());
            f_metrics.train_mse = Some(t.report.best_loss);
            f_metrics.test_mse = t.test_mse;
            f_metrics.best_epoch = Some(t.report.best_epoch);
            f_metrics.symplecticity_trend = t.trend;
        }
        f_metrics.max_energy_drift = fnn_drift;
        f_metrics.max_symplectic_residual = fnn_residual;
        metrics.insert("fnn".to_string(), f_metrics);
    }

    let manifest = Manifest {
        schema_version: 1,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|t| t.as_secs())
            .unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        preset: name.clone(),
        config: ResolvedConfig {
            system: preset.system.name().to_string(),
            task: preset.task.name().to_string(),
            h: preset.h,
            n,
            lr,
            epochs,
            rollout_steps: steps,
            seed,
            log_every,
        },
        stages: stages.records,
        metrics,
    };
    let json = manifest
        .to_json()
        .map_err(|e| runtime(format!("serializing manifest: {e}")))?;
    common::write_file(&out_dir.join("manifest.json"), &(json + "\n"))?;
    println!("manifest={}/manifest.json", common::rel_display(&out_dir));

    if stages.failed {
        let failed = manifest_first_failure(&manifest.stages);
        return Err(runtime(format!(
            "experiment failed at stage {failed}; details in manifest.json"
        )));
    }
    Ok(())
}

fn manifest_first_failure(stages: &[StageRecord]) -> String {
    stages
        .iter()
        .find(|s| s.status == StageStatus::Failed)
        .map(|s| s.name.clone())
        .unwrap_or_else(|| "unknown".to_string())
}
