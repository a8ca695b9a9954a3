//! `train`: fit a model to a dataset and write model JSON plus a loss
//! history CSV.

use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use sympflow::sympnet::{Activation, SympNetConfig};
use sympflow::train::history_to_csv;
use sympflow::{Dataset, Fnn, ModelKind, SympNet, TrainConfig, TrainableModel};

use crate::common::{pick, pick_opt, pick_required, usage, write_file, CliResult};
use crate::config;

pub const DEFAULT_EPOCHS: usize = 100_000;
pub const PAPER_SCALE_EPOCHS: usize = 1_000_000;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Model family: sympnet | fnn.
    #[arg(long)]
    model: Option<String>,
    /// Training dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out dataset CSV for the printed test MSE.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output model JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss history CSV path (default: model path with "-loss.csv").
    #[arg(long)]
    loss_out: Option<PathBuf>,
    /// Training epochs (default 100000; 1000000 under --paper-scale).
    #[arg(long)]
    epochs: Option<usize>,
    /// Full-length training as in the original experiments.
    #[arg(long)]
    paper_scale: bool,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Parameter initialization seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Symplecticity penalty weight (FNN only; 0 disables).
    #[arg(long)]
    w_penalty: Option<f64>,
    /// Epochs between loss history records.
    #[arg(long)]
    log_every: Option<usize>,
    /// SympNet gate unit count k.
    #[arg(long)]
    k: Option<usize>,
    /// SympNet shear sublayers n per linear unit.
    #[arg(long)]
    sublayers: Option<usize>,
    /// SympNet gate activation: sigmoid | tanh.
    #[arg(long)]
    activation: Option<String>,
    /// Give every SympNet gate a trainable gain.
    #[arg(long)]
    trainable_gate_scale: bool,
    /// FNN hidden layer sizes, comma separated.
    #[arg(long)]
    hidden: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainFileConfig {
    model: Option<String>,
    data: Option<PathBuf>,
    test: Option<PathBuf>,
    out: Option<PathBuf>,
    loss_out: Option<PathBuf>,
    epochs: Option<usize>,
    paper_scale: Option<bool>,
    lr: Option<f64>,
    seed: Option<u64>,
    w_penalty: Option<f64>,
    log_every: Option<usize>,
    k: Option<usize>,
    sublayers: Option<usize>,
    activation: Option<String>,
    trainable_gate_scale: Option<bool>,
    hidden: Option<String>,
}

pub fn effective_epochs(explicit: Option<usize>, paper_scale: bool) -> CliResult<usize> {
    let epochs = explicit.unwrap_or(if paper_scale {
        PAPER_SCALE_EPOCHS
    } else {
        DEFAULT_EPOCHS
    });
    if epochs == 0 {
        return Err(usage("--epochs must be >= 1"));
    }
    Ok(epochs)
}

fn default_loss_path(model_out: &Path) -> PathBuf {
    let stem = model_out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    model_out.with_file_name(format!("{stem}-loss.csv"))
}

pub fn run(args: TrainArgs, config_path: Option<&Path>) -> CliResult<()> {
    let file: TrainFileConfig = config::load(config_path)?;

    let kind_name = pick_required(args.model, file.model, "model")?;
    let kind = ModelKind::from_name(&kind_name).map_err(|e| usage(e.to_string()))?;
    let data_path = pick_required(args.data, file.data, "data")?;
    let dataset = Dataset::load(&data_path)?;
    let test = pick_opt(args.test, file.test)
        .map(|p| Dataset::load(&p))
        .transpose()?;
    if let Some(t) = &test {
        if t.batch().dof() != dataset.batch().dof() {
            return Err(usage(format!(
                "test set has d={}, training set d={}",
                t.batch().dof(),
                dataset.batch().dof()
            )));
        }
    }

    let paper_scale = args.paper_scale || file.paper_scale.unwrap_or(false);
    let epochs = effective_epochs(pick_opt(args.epochs, file.epochs), paper_scale)?;
    let train_cfg = TrainConfig {
        epochs,
        lr: pick(args.lr, file.lr, 0.1),
        w_penalty: pick(args.w_penalty, file.w_penalty, 0.0),
        log_every: pick(args.log_every, file.log_every, 100),
    };
    train_cfg.validate().map_err(|e| usage(e.to_string()))?;
    let seed = pick(args.seed, file.seed, 1);
    let out = pick(args.out, file.out, PathBuf::from("model.json"));
    let loss_out = pick(args.loss_out, file.loss_out, default_loss_path(&out));

    let d = dataset.batch().dof();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (model_json, params, history, best_loss, train_mse, test_mse) = match kind {
        ModelKind::SympNet => {
            let mut cfg = SympNetConfig::new(
                d,
                dataset.meta().h,
                pick(args.k, file.k, 8),
                pick(args.sublayers, file.sublayers, 5),
            );
            if let Some(name) = pick_opt(args.activation, file.activation) {
                cfg.activation = Activation::from_name(&name).map_err(|e| usage(e.to_string()))?;
            }
            cfg.trainable_gate_scale =
                args.trainable_gate_scale || file.trainable_gate_scale.unwrap_or(false);
            let net = SympNet::new(&cfg, &mut rng)?;
            let params = net.param_count();
            let report = sympflow::train(net, dataset.batch(), &train_cfg)?;
            let train_mse = dataset.batch().mse(&report.model)?;
            let test_mse = test
                .as_ref()
                .map(|t| t.batch().mse(&report.model))
                .transpose()?;
            (
                report.model.to_json()?,
                params,
                report.history,
                report.best_loss,
                train_mse,
                test_mse,
            )
        }
        ModelKind::Fnn => {
            let hidden = match pick_opt(args.hidden, file.hidden) {
                Some(s) => s
                    .split(',')
                    .map(|f| {
                        f.trim()
                            .parse::<usize>()
                            .map_err(|e| usage(format!("bad hidden size {f:?}: {e}")))
                    })
                    .collect::<CliResult<Vec<usize>>>()?,
                None => vec![50, 50],
            };
            let net = Fnn::new(d, &hidden, &mut rng)?;
            let params = net.param_count();
            let report = sympflow::train(net, dataset.batch(), &train_cfg)?;
            let train_mse = dataset.batch().mse(&report.model)?;
            let test_mse = test
                .as_ref()
                .map(|t| t.batch().mse(&report.model))
                .transpose()?;
            (
                report.model.to_json()?,
                params,
                report.history,
                report.best_loss,
                train_mse,
                test_mse,
            )
        }
    };

    write_file(&out, &model_json)?;
    write_file(&loss_out, &history_to_csv(&history))?;

    println!("model={}", out.display());
    println!("kind={}", kind.name());
    println!("params={params}");
    println!("epochs={epochs}");
    println!("best_loss={best_loss}");
    println!("train_mse={train_mse}");
    if let Some(t) = test_mse {
        println!("test_mse={t}");
    }
    Ok(())
}
