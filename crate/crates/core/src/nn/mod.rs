//! Minimal neural-network engine: 1-D convolution, dense, batch-norm and
//! activation layers with hand-written backward passes, cross-entropy,
//! Adam, plateau/early-stop scheduling, gradient checking and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod network;
pub mod optim;
mod real;
pub mod schedule;
mod tensor;

pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, GradCheckReport, Probe};
pub use layers::{
    activation, batchnorm, conv1d_forward, dense_forward, Activation, ActivationKind, BatchNorm, Conv1d, Dense, Layer,
    Mode, Param, PowerNorm,
};
pub use loss::cross_entropy;
pub use network::Sequential;
pub use optim::{adam_update, AdamConfig, OptimizerState};
pub use real::Real;
pub use schedule::{schedule_step, Decision, TrainSchedule};
pub use tensor::RealArray;
