//! Exact Winograd minimal-filtering convolution.
//!
//! Supported plans are F(2x2, 3x3) and F(4x4, 3x3). Convolution here means
//! CNN-style cross-correlation (no filter flip), stride 1, "valid" extent.
//! When the valid extent is not a multiple of `m`, the input is zero-padded
//! on the bottom/right up to the tile boundary and the output is cropped.

mod conv;
mod plan;
mod tiles;
mod transform;

pub use conv::{
    conv2d_direct, winograd_conv2d, winograd_conv2d_with, DigitalEwmm, LayerScales, TileMultiplier,
    TileSite, TransformedFilters,
};
pub use plan::{make_plan, misprinted_f4x3, misprinted_f4x3_bt_rows, WinogradPlan};
pub use tiles::{tile_stream, OutputWindow, TileStream};
pub use transform::{ewmm, inverse_transform, transform_filter, transform_input};

/// Multiply-count ratio of direct over Winograd convolution for one tile,
/// `(m r)^2 / (m + r - 1)^2`.
pub fn complexity_reduction(m: usize, r: usize) -> f64 {
    let direct = (m * r) as f64;
    let wino = (m + r - 1) as f64;
    (direct * direct) / (wino * wino)
}
