//! Experiment manifest: what ran, what it produced, and the headline
//! metrics. Written even when a stage fails so partial runs stay
//! inspectable. All paths are relative to the experiment directory;
//! `created_unix` is the only field that varies between identical runs.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub created_unix: u64,
    pub tool_version: String,
    pub preset: String,
    pub config: ResolvedConfig,
    pub stages: Vec<StageRecord>,
    pub metrics: BTreeMap<String, ModelMetrics>,
}

/// Preset settings after applying CLI overrides.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub system: String,
    pub task: String,
    pub h: f64,
    pub n: usize,
    pub lr: f64,
    pub epochs: usize,
    pub rollout_steps: usize,
    pub seed: u64,
    pub log_every: usize,
}

#[derive(Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Default, Serialize)]
pub struct ModelMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_symplectic_residual: Option<f64>,
    /// Symplecticity defect of a penalty-free FNN early vs late in training
    /// (measured on the test set).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symplecticity_trend: Option<SymplecticityTrend>,
}

#[derive(Debug, Serialize)]
pub struct SymplecticityTrend {
    pub epoch_early: usize,
    pub mse_s_early: f64,
    pub mse_s_final: f64,
}

impl Manifest {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
