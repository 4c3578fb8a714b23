//! Noise-aware training and inference of a small Winograd CNN.

mod data;
mod gradcheck;
mod model;
mod noise;
mod train;

pub use data::{parse_csv, Dataset, Split, DIGITS_CSV};
pub use gradcheck::{gradient_check, GradCheck};
pub use model::{argmax, cross_entropy, Arch, ForwardNoise, Gradients, SmallCnn, Trace, STAGES};
pub use noise::{log_grid, validate_grid, NoisePhase, NoiseSpec, SwingScope, WeightNoiseMode};
pub use train::{
    evaluate, mean_loss, noise_sweep, train, EpochStats, Evaluation, SweepCell, SweepConfig, SweepResult,
    TrainConfig, Trained, TrainedLevel,
};
