//! Losses, full-batch training under the strict inductive protocol, two-pass
//! inference, cross-validation and the finite-difference gradient check.

mod config;
mod cv;
mod gradcheck;
mod loss;
mod persist;
mod run;

pub use config::{parse_kv, TrainConfig, CONFIG_KEYS};
pub use cv::{aggregate, cross_validate, cross_validate_parallel, fold_assignment, fold_bundle, run_fold, CvResult, MetricSummary, RunResult};
pub use gradcheck::{gradcheck_fixture, gradient_check, GradCheckReport, TensorError};
pub use loss::{aux_loss, aux_loss_grad, classification_loss, classification_loss_grad, total_loss};
pub use persist::SavedModel;
pub use run::{argmax_rows, inference, train_one, EpochLog, EpochRecord, EvalGraph, Predictions, TrainOutput, TrainingGraph};
