//! `generate`: manufacture a flow-map dataset and write it as CSV.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use sympflow::{Dataset, IntegratorConfig, SampleBox, Scheme, System};

use crate::common::{
    parse_point, pick, pick_opt, pick_required, usage, write_file, CliResult,
};
use crate::config;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Hamiltonian system: pendulum | lotka-volterra | kepler | harmonic.
    #[arg(long)]
    system: Option<String>,
    /// solve (box-sampled pairs) or predict (one trajectory).
    #[arg(long)]
    task: Option<String>,
    /// Number of pairs.
    #[arg(long)]
    n: Option<usize>,
    /// Flow-map time step.
    #[arg(long)]
    h: Option<f64>,
    /// RNG seed for box sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory start "p1,..,q1,.." (predict task).
    #[arg(long)]
    start: Option<String>,
    /// Box lower corner "p1,..,q1,.." (solve task; system default if omitted).
    #[arg(long)]
    lower: Option<String>,
    /// Box upper corner (solve task; system default if omitted).
    #[arg(long)]
    upper: Option<String>,
    /// Reference integrator: gauss4 | midpoint.
    #[arg(long)]
    scheme: Option<String>,
    /// Substeps per flow-map step.
    #[arg(long)]
    substeps: Option<usize>,
    /// Fixed-point tolerance of the implicit solver.
    #[arg(long)]
    fp_tol: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long)]
    fp_max_iter: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenerateConfig {
    system: Option<String>,
    task: Option<String>,
    n: Option<usize>,
    h: Option<f64>,
    seed: Option<u64>,
    start: Option<String>,
    lower: Option<String>,
    upper: Option<String>,
    scheme: Option<String>,
    substeps: Option<usize>,
    fp_tol: Option<f64>,
    fp_max_iter: Option<usize>,
    out: Option<PathBuf>,
}

pub fn integrator_from(
    scheme: Option<String>,
    substeps: Option<usize>,
    fp_tol: Option<f64>,
    fp_max_iter: Option<usize>,
) -> CliResult<IntegratorConfig> {
    let default = IntegratorConfig::default();
    let scheme = match scheme {
        Some(name) => Scheme::from_name(&name).map_err(|e| usage(e.to_string()))?,
        None => default.scheme,
    };
    Ok(IntegratorConfig {
        scheme,
        substeps: substeps.unwrap_or(default.substeps),
        fp_tol: fp_tol.unwrap_or(default.fp_tol),
        fp_max_iter: fp_max_iter.unwrap_or(default.fp_max_iter),
    })
}

pub fn run(args: GenerateArgs, config_path: Option<&std::path::Path>) -> CliResult<()> {
    let file: GenerateConfig = config::load(config_path)?;

    let system_name = pick_required(args.system, file.system, "system")?;
    let system = System::from_name(&system_name).map_err(|e| usage(e.to_string()))?;
    let task = pick_required(args.task, file.task, "task")?;
    let n = pick(args.n, file.n, 10_000);
    let h = pick(args.h, file.h, 0.1);
    let integ = integrator_from(
        pick_opt(args.scheme, file.scheme),
        pick_opt(args.substeps, file.substeps),
        pick_opt(args.fp_tol, file.fp_tol),
        pick_opt(args.fp_max_iter, file.fp_max_iter),
    )?;
    let out = pick(args.out, file.out, PathBuf::from("dataset.csv"));

    let dataset = match task.as_str() {
        "solve" => {
            let (def_lo, def_hi) = system.default_box();
            let lower = match pick_opt(args.lower, file.lower) {
                Some(s) => parse_point(&s)?,
                None => def_lo,
            };
            let upper = match pick_opt(args.upper, file.upper) {
                Some(s) => parse_point(&s)?,
                None => def_hi,
            };
            let domain = SampleBox::new(lower, upper).map_err(|e| usage(e.to_string()))?;
            let seed = pick(args.seed, file.seed, 1);
            Dataset::sample_box(system, &domain, n, h, &integ, seed)?
        }
        "predict" => {
            let start = pick_required(args.start, file.start, "start")?;
            let x0 = parse_point(&start)?;
            if x0.len() != 2 * system.dof() {
                return Err(usage(format!(
                    "--start needs {} coordinates for {}, got {}",
                    2 * system.dof(),
                    system.name(),
                    x0.len()
                )));
            }
            Dataset::sample_trajectory(system, &x0, n, h, &integ)?
        }
        other => {
            return Err(usage(format!(
                "unknown task {other:?}; expected solve or predict"
            )))
        }
    };

    write_file(&out, &dataset.to_csv())?;
    println!("dataset={}", out.display());
    println!("system={}", system.name());
    println!("pairs={}", dataset.len());
    println!("h={h}");
    Ok(())
}
