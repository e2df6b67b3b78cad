//! Photometric training of a single field: the schedule, the optimizer, the
//! regularizers that stand in for the baseline's native losses, and the
//! expert/baseline training loops.

mod adam;
mod loss;
mod schedule;
mod trainer;

pub use adam::{AdamConfig, OptimizerState};
pub use loss::{l_orig, own_histogram_ray, photometric_ray, tv_touched, LossWeights};
pub use schedule::lr_at;
pub use trainer::{
    train_baseline, train_expert, LogEntry, PhotometricTrainer, StepStats, TrainConfig, TrainLog, TrainView,
};
