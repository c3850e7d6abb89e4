//! Plateau learning-rate decay and early stopping on validation loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub lr_plateau_patience: usize,
    pub lr_factor: f64,
    /// A validation loss counts as an improvement only if it beats the best
    /// so far by more than this.
    pub min_delta: f64,
}

impl TrainSchedule {
    /// Autoencoder schedule: 150 epochs, stop after 100 stale epochs,
    /// decay by 0.1 after 50.
    pub fn autoencoder() -> Self {
        Self {
            max_epochs: 150,
            early_stop_patience: 100,
            lr_plateau_patience: 50,
            lr_factor: 0.1,
            min_delta: 1e-4,
        }
    }

    /// RIS phase-network pre-training: up to 1000 epochs, stop after 20
    /// stale epochs, decay by 0.33 after 10.
    pub fn ris_pretrain() -> Self {
        Self {
            max_epochs: 1000,
            early_stop_patience: 20,
            lr_plateau_patience: 10,
            lr_factor: 0.33,
            min_delta: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.early_stop_patience == 0 || self.lr_plateau_patience == 0 {
            return Err(Error::Config("schedule epochs and patience values must be >= 1".into()));
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return Err(Error::Config(format!("lr_factor {} must lie in (0, 1)", self.lr_factor)));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::Config("min_delta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleOutcome {
    pub decision: Decision,
    pub lr: f64,
    pub lr_reduced: bool,
}

/// Index of the epoch that last improved the best loss by more than `min_delta`.
pub fn best_epoch(history: &[f64], min_delta: f64) -> usize {
    let mut best = f64::INFINITY;
    let mut idx = 0;
    for (i, &v) in history.iter().enumerate() {
        if i == 0 || v < best - min_delta {
            best = v;
            idx = i;
        }
    }
    idx
}

/// Decides what happens after the last epoch in `history`.
///
/// The stale run is the number of epochs from the last improving epoch
/// (inclusive) to the end, so a flat history of length `p` is a plateau of
/// length `p`. The learning rate decays each time the run reaches a
/// multiple of `lr_plateau_patience`; training stops once it reaches
/// `early_stop_patience` or `max_epochs` epochs have run.
pub fn schedule_step(sched: &TrainSchedule, history: &[f64], lr: f64) -> ScheduleOutcome {
    assert!(!history.is_empty(), "schedule_step needs at least one epoch");
    let stale = history.len() - best_epoch(history, sched.min_delta);
    let lr_reduced = stale >= sched.lr_plateau_patience && stale % sched.lr_plateau_patience == 0;
    let lr = if lr_reduced { lr * sched.lr_factor } else { lr };
    let decision = if stale >= sched.early_stop_patience || history.len() >= sched.max_epochs {
        Decision::Stop
    } else {
        Decision::Continue
    };
    ScheduleOutcome {
        decision,
        lr,
        lr_reduced,
    }
}
