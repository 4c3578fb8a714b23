//! Desk-scale simulator and analytical model of a Winograd-filtering photonic
//! CNN accelerator.
//!
//! * [`winograd`]: exact Winograd convolution plus a direct-convolution oracle.
//! * [`photonic`]: device models (microring weighting, photodetection noise,
//!   quantization) and the analog element-wise multiply path.
//! * [`perf`]: pipeline timing, throughput, power and efficiency models.
//! * [`nn`]: a tiny CNN with output/weight noise injection for noise-aware
//!   training experiments.
//! * [`resources`]: WDM channel, microring and memristor feasibility checks.
//! * [`commands`]: the experiment pipelines behind the `photowino` CLI.
//!
//! Tensor layout: all tensors are dense, row-major and channel-major. A feature
//! map is indexed `[channel][row][col]`, a filter bank `[filter][channel][row][col]`.

pub mod commands;
pub mod config;
pub mod error;
pub mod nn;
pub mod perf;
pub mod photonic;
pub mod report;
pub mod resources;
pub mod seed;
pub mod tensor;
pub mod winograd;

pub use error::{Error, Result};
