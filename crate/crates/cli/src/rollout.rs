//! `rollout`: iterate a trained model from a start point, optionally with a
//! reference trajectory and per-step energy columns.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use sympflow::model::rollout_map;
use sympflow::{integrators, Dataset, IntegratorConfig, PhaseMap, System};

use crate::common::{
    coord_names, parse_point, pick, pick_opt, pick_required, runtime, usage, write_file, AnyModel,
    CliResult,
};
use crate::config;
use crate::generate::integrator_from;

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Trained model JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Start coordinates "p1,..,q1,..". Mutually exclusive with --data.
    #[arg(long)]
    start: Option<String>,
    /// Dataset CSV whose final point is the start (prediction protocol).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of model steps.
    #[arg(long)]
    steps: Option<usize>,
    /// System for reference/energy columns (defaults to the --data system).
    #[arg(long)]
    system: Option<String>,
    /// Also integrate the true system from the same start.
    #[arg(long)]
    with_reference: bool,
    /// Add a per-step energy column for the model trajectory.
    #[arg(long)]
    with_energy: bool,
    /// Time step for the reference trajectory (defaults to the dataset's h,
    /// then to a SympNet model's built-in h).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    fp_max_iter: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RolloutFileConfig {
    model: Option<PathBuf>,
    start: Option<String>,
    data: Option<PathBuf>,
    steps: Option<usize>,
    system: Option<String>,
    with_reference: Option<bool>,
    with_energy: Option<bool>,
    h: Option<f64>,
    scheme: Option<String>,
    substeps: Option<usize>,
    fp_tol: Option<f64>,
    fp_max_iter: Option<usize>,
    out: Option<PathBuf>,
}

/// Rolls the map out and renders the CSV. `reference` adds `*_ref` columns
/// from the true flow; `energy` adds an `H` column for the model states.
pub fn rollout_csv(
    map: &dyn PhaseMap,
    x0: &[f64],
    steps: usize,
    reference: Option<(System, f64, &IntegratorConfig)>,
    energy: Option<System>,
) -> CliResult<String> {
    if x0.len() != map.dim() {
        return Err(usage(format!(
            "start has {} coordinates, model expects {}",
            x0.len(),
            map.dim()
        )));
    }
    let roll = rollout_map(map, x0, steps);
    if let Some(e) = &roll.error {
        return Err(runtime(format!(
            "model rollout failed after {} steps: {e}",
            roll.states.len() - 1
        )));
    }
    let ref_states = match &reference {
        Some((system, h, integ)) => Some(
            integrators::rollout(*system, x0, *h, steps, integ)
                .into_result()
                .map_err(|e| runtime(format!("reference rollout failed: {e}")))?,
        ),
        None => None,
    };

    let d = map.dof();
    let names = coord_names(d);
    let mut header = vec!["step".to_string()];
    header.extend(names.iter().cloned());
    if ref_states.is_some() {
        header.extend(names.iter().map(|n| format!("{n}_ref")));
    }
    if energy.is_some() {
        header.push("H".to_string());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (k, state) in roll.states.iter().enumerate() {
        out.push_str(&k.to_string());
        for c in state {
            out.push_str(&format!(",{c}"));
        }
        if let Some(refs) = &ref_states {
            for c in &refs[k] {
                out.push_str(&format!(",{c}"));
            }
        }
        if let Some(system) = energy {
            out.push_str(&format!(",{}", system.energy(state)?));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn run(args: RolloutArgs, config_path: Option<&Path>) -> CliResult<()> {
    let file: RolloutFileConfig = config::load(config_path)?;

    let model_path = pick_required(args.model, file.model, "model")?;
    let model = AnyModel::load(&model_path)?;
    let steps = pick(args.steps, file.steps, 1000);
    let out = pick(args.out, file.out, PathBuf::from("rollout.csv"));
    let with_reference = args.with_reference || file.with_reference.unwrap_or(false);
    let with_energy = args.with_energy || file.with_energy.unwrap_or(false);

    let start_flag = pick_opt(args.start, file.start);
    let data_flag = pick_opt(args.data, file.data);
    let dataset = data_flag.map(|p| Dataset::load(&p)).transpose()?;
    let x0 = match (&start_flag, &dataset) {
        (Some(s), _) => parse_point(s)?,
        (None, Some(ds)) => ds.final_point(),
        (None, None) => return Err(usage("need --start or --data to fix the start point")),
    };

    let system = match pick_opt(args.system, file.system) {
        Some(name) => Some(System::from_name(&name).map_err(|e| usage(e.to_string()))?),
        None => dataset.as_ref().map(|ds| ds.meta().system),
    };

    let reference = if with_reference {
        let system = system.ok_or_else(|| usage("--with-reference needs --system or --data"))?;
        let h = pick_opt(args.h, file.h)
            .or_else(|| dataset.as_ref().map(|ds| ds.meta().h))
            .or_else(|| model.step_h())
            .ok_or_else(|| usage("--with-reference needs --h (or a dataset/SympNet that carries one)"))?;
        let integ = integrator_from(
            pick_opt(args.scheme, file.scheme),
            pick_opt(args.substeps, file.substeps),
            pick_opt(args.fp_tol, file.fp_tol),
            pick_opt(args.fp_max_iter, file.fp_max_iter),
        )?;
        Some((system, h, integ))
    } else {
        None
    };
    let energy = if with_energy {
        Some(system.ok_or_else(|| usage("--with-energy needs --system or --data"))?)
    } else {
        None
    };

    let csv = rollout_csv(
        model.phase_map(),
        &x0,
        steps,
        reference.as_ref().map(|(s, h, i)| (*s, *h, i)),
        energy,
    )?;
    write_file(&out, &csv)?;
    println!("rollout={}", out.display());
    println!("steps={steps}");
    Ok(())
}
