//! Full-batch Adam training.
//!
//! Every epoch evaluates the loss and gradient on the entire dataset and
//! applies one bias-corrected Adam update. There is no minibatching and no
//! shuffling, so a run is a pure function of the initial parameters, the
//! data and the configuration. The best parameters seen (by pre-update
//! loss) are checkpointed and returned alongside the final ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Batch, TrainableModel};

/// Bias-corrected Adam on a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step_count: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(lr: f64, param_count: usize) -> Result<Self> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
        }
        Ok(Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One update in place. Rejects non-finite gradients before touching
    /// any state so a failed step leaves parameters and moments intact.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                actual: grads.len(),
            });
        }
        if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient component {g}")));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Weight of the symplecticity penalty; models that are symplectic by
    /// construction ignore it.
    pub w_penalty: f64,
    /// History records one entry every this many epochs (plus the final
    /// epoch of every segment).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100_000,
            lr: 0.1,
            w_penalty: 0.0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.w_penalty.is_finite() && self.w_penalty >= 0.0) {
            return Err(Error::invalid("w_penalty must be finite and >= 0"));
        }
        if self.log_every == 0 {
            return Err(Error::invalid("log_every must be >= 1"));
        }
        Ok(())
    }
}

/// One point of the loss history. `mse_s` is populated only when the
/// symplecticity penalty participates in the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub mse_d: f64,
    pub mse_s: Option<f64>,
}

/// Incremental training driver. Splitting a run into segments (for example
/// to snapshot the model at a given epoch) yields bit-identical parameter
/// trajectories to a single uninterrupted run.
pub struct TrainSession<M: TrainableModel> {
    model: M,
    data: Batch,
    cfg: TrainConfig,
    adam: AdamState,
    params: Vec<f64>,
    epoch: usize,
    best_loss: f64,
    best_epoch: usize,
    best_params: Vec<f64>,
    history: Vec<LossRecord>,
}

impl<M: TrainableModel + Clone> TrainSession<M> {
    pub fn new(model: M, data: Batch, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if data.dof() != model.dof() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: data.dim(),
            });
        }
        let params = model.params();
        let adam = AdamState::new(cfg.lr, params.len())?;
        Ok(Self {
            model,
            data,
            cfg,
            adam,
            best_params: params.clone(),
            params,
            epoch: 0,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[LossRecord] {
        &self.history
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    /// Model with the current (last-epoch) parameters.
    pub fn model(&self) -> &M {
        &self.model
    }

    /// Model with the best-loss parameters seen so far.
    pub fn best_model(&self) -> Result<M> {
        let mut m = self.model.clone();
        m.set_params(&self.best_params)?;
        Ok(m)
    }

    /// Runs `count` more epochs. The recorded loss of epoch `e` is the loss
    /// at the parameters entering that epoch, as produced by the same
    /// evaluation that yields the gradient.
    pub fn run_epochs(&mut self, count: usize) -> Result<()> {
        for _ in 0..count {
            self.epoch += 1;
            let (loss, grads) = self.model.loss_and_grad(&self.data, self.cfg.w_penalty)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss {loss} at epoch {}",
                    self.epoch
                )));
            }
            if loss < self.best_loss {
                self.best_loss = loss;
                self.best_epoch = self.epoch;
                self.best_params.copy_from_slice(&self.params);
            }
            if self.epoch.is_multiple_of(self.cfg.log_every) || self.epoch == 1 {
                // With an active penalty, `loss` is mse_d + w * mse_s; split
                // it for the history.
                let (mse_d, mse_s) = if self.cfg.w_penalty > 0.0 {
                    let d = self.model.loss(&self.data, 0.0)?;
                    (d, Some((loss - d) / self.cfg.w_penalty))
                } else {
                    (loss, None)
                };
                self.history.push(LossRecord {
                    epoch: self.epoch,
                    mse_d,
                    mse_s,
                });
            }
            self.adam.step(&mut self.params, &grads).map_err(|e| match e {
                Error::NonFinite(what) => {
                    Error::NonFinite(format!("{what} at epoch {}", self.epoch))
                }
                other => other,
            })?;
            self.model.set_params(&self.params)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<TrainReport<M>> {
        let mut best = self.model.clone();
        best.set_params(&self.best_params)?;
        Ok(TrainReport {
            model: best,
            final_model: self.model,
            best_loss: self.best_loss,
            best_epoch: self.best_epoch,
            epochs_run: self.epoch,
            history: self.history,
        })
    }
}

/// Outcome of a training run.
pub struct TrainReport<M> {
    /// Parameters with the lowest observed training loss.
    pub model: M,
    /// Parameters after the last epoch.
    pub final_model: M,
    pub best_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub history: Vec<LossRecord>,
}

/// Trains for `cfg.epochs` epochs and returns the report.
pub fn train<M: TrainableModel + Clone>(
    model: M,
    data: &Batch,
    cfg: &TrainConfig,
) -> Result<TrainReport<M>> {
    let mut session = TrainSession::new(model, data.clone(), cfg.clone())?;
    session.run_epochs(cfg.epochs)?;
    session.finish()
}

/// Loss history as CSV (`epoch,mse_d,mse_s`; `mse_s` empty when absent).
pub fn history_to_csv(history: &[LossRecord]) -> String {
    let mut out = String::from("epoch,mse_d,mse_s\n");
    for rec in history {
        out.push_str(&rec.epoch.to_string());
        out.push(',');
        out.push_str(&format!("{}", rec.mse_d));
        out.push(',');
        if let Some(s) = rec.mse_s {
            out.push_str(&format!("{s}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympnet::{SympNet, SympNetConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sympnet(cfg: SympNetConfig, seed: u64) -> SympNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SympNet::new(&cfg, &mut rng).unwrap()
    }

    fn grid_pairs(map: impl Fn(&[f64]) -> Vec<f64>, half: f64, side: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut pairs = Vec::new();
        for i in 0..side {
            for j in 0..side {
                let p = -half + 2.0 * half * i as f64 / (side - 1) as f64;
                let q = -half + 2.0 * half * j as f64 / (side - 1) as f64;
                let x = vec![p, q];
                let y = map(&x);
                pairs.push((x, y));
            }
        }
        pairs
    }

    #[test]
    fn adam_update_magnitude_approaches_lr_under_constant_gradient() {
        let mut adam = AdamState::new(0.05, 1).unwrap();
        let mut params = vec![0.0];
        let mut last = 0.0;
        for _ in 0..500 {
            last = params[0];
            adam.step(&mut params, &[3.7]).unwrap();
        }
        let update = (params[0] - last).abs();
        assert!((update - 0.05).abs() < 1e-6, "update {update}");
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut adam = AdamState::new(0.1, 3).unwrap();
        let mut params = vec![1.0, -2.0, 0.5];
        adam.step(&mut params, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut adam = AdamState::new(0.1, 2).unwrap();
        let mut params = vec![1.0, 2.0];
        let err = adam.step(&mut params, &[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        // Failed step must not advance state.
        assert_eq!(params, vec![1.0, 2.0]);
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig {
            epochs: 1,
            lr: 0.1,
            w_penalty: 0.0,
            log_every: 1,
        };
        ok.validate().unwrap();
        assert!(TrainConfig { epochs: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { lr: -1.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { w_penalty: -0.1, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { log_every: 0, ..ok.clone() }.validate().is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = SympNetConfig::new(1, 0.1, 2, 2);
        let pairs = grid_pairs(|x| vec![x[0] - 0.1 * x[1], x[1] + 0.1 * x[0]], 1.0, 4);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 200,
            lr: 0.01,
            w_penalty: 0.0,
            log_every: 10,
        };
        let run = |seed| {
            let report = train(sympnet(cfg, seed), &batch, &tc).unwrap();
            (report.final_model.params(), report.history)
        };
        let (p1, h1) = run(7);
        let (p2, h2) = run(7);
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
        let (p3, _) = run(8);
        assert_ne!(p1, p3);
    }

    #[test]
    fn segmented_run_matches_single_run() {
        let cfg = SympNetConfig::new(1, 0.1, 1, 1);
        let pairs = grid_pairs(|x| vec![x[0] + 0.1, x[1] - 0.05], 0.5, 3);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 100,
            lr: 0.01,
            w_penalty: 0.0,
            log_every: 5,
        };
        let whole = train(sympnet(cfg, 3), &batch, &tc).unwrap();
        let mut session = TrainSession::new(sympnet(cfg, 3), batch, tc).unwrap();
        session.run_epochs(40).unwrap();
        session.run_epochs(60).unwrap();
        let split = session.finish().unwrap();
        assert_eq!(whole.final_model.params(), split.final_model.params());
        assert_eq!(whole.history, split.history);
        assert_eq!(whole.best_epoch, split.best_epoch);
    }

    #[test]
    fn fits_identity_map() {
        // The gates inject h * sigma terms, so representing the identity
        // needs the linear units to cancel them; training finds that
        // cancellation to high accuracy on a compact box.
        let cfg = SympNetConfig::new(1, 0.1, 2, 2);
        let pairs = grid_pairs(|x| x.to_vec(), 0.5, 10);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 2000,
            lr: 0.01,
            w_penalty: 0.0,
            log_every: 100,
        };
        let report = train(sympnet(cfg, 11), &batch, &tc).unwrap();
        assert!(
            report.best_loss < 1e-8,
            "identity fit stalled at {}",
            report.best_loss
        );
    }

    #[test]
    fn fits_linear_shear_exactly() {
        // Target (p, q) -> (p + 0.1 q, q) is inside the model class for a
        // gate-free net: one sublayer with h * sym(A) = 0.1 and zero bias.
        let cfg = SympNetConfig::new(1, 0.1, 0, 1);
        let pairs = grid_pairs(|x| vec![x[0] + 0.1 * x[1], x[1]], 1.0, 5);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 4000,
            lr: 0.01,
            w_penalty: 0.0,
            log_every: 100,
        };
        let report = train(sympnet(cfg, 5), &batch, &tc).unwrap();
        assert!(
            report.best_loss <= 1e-10,
            "shear fit stalled at {}",
            report.best_loss
        );
    }

    #[test]
    fn loss_descends_over_thousand_epoch_windows() {
        let cfg = SympNetConfig::new(1, 0.1, 2, 2);
        let pairs = grid_pairs(|x| x.to_vec(), 0.5, 10);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 5000,
            lr: 0.01,
            w_penalty: 0.0,
            log_every: 100,
        };
        let report = train(sympnet(cfg, 11), &batch, &tc).unwrap();
        let by_epoch: std::collections::HashMap<usize, f64> = report
            .history
            .iter()
            .map(|r| (r.epoch, r.mse_d))
            .collect();
        let mut checked = 0;
        for start in (100..=4000).step_by(100) {
            let (Some(a), Some(b)) = (by_epoch.get(&start), by_epoch.get(&(start + 1000))) else {
                continue;
            };
            checked += 1;
            assert!(
                *b <= *a * (1.0 + 1e-6),
                "loss rose over [{start}, {}]: {a} -> {b}",
                start + 1000
            );
        }
        assert!(checked >= 30);
    }

    #[test]
    fn best_loss_checkpoint_tracks_minimum() {
        let cfg = SympNetConfig::new(1, 0.1, 1, 1);
        let pairs = grid_pairs(|x| vec![x[0] + 0.1 * x[1], x[1]], 1.0, 4);
        let batch = Batch::from_pairs(1, &pairs).unwrap();
        let tc = TrainConfig {
            epochs: 300,
            lr: 0.05,
            w_penalty: 0.0,
            log_every: 1,
        };
        let report = train(sympnet(cfg, 9), &batch, &tc).unwrap();
        let best_recorded = report
            .history
            .iter()
            .map(|r| r.mse_d)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_loss, best_recorded);
        // Re-evaluating the checkpointed parameters reproduces the
        // checkpointed loss.
        let re = report.model.loss(&batch, 0.0).unwrap();
        assert!(
            (re - report.best_loss).abs() <= 1e-12 * report.best_loss.max(1.0),
            "checkpoint loss {re} vs {}",
            report.best_loss
        );
    }

    #[test]
    fn history_csv_format() {
        let history = vec![
            LossRecord { epoch: 1, mse_d: 0.5, mse_s: None },
            LossRecord { epoch: 2, mse_d: 0.25, mse_s: Some(0.125) },
        ];
        let csv = history_to_csv(&history);
        assert_eq!(csv, "epoch,mse_d,mse_s\n1,0.5,\n2,0.25,0.125\n");
    }
}
