use crate::tensor::{FeatureMap, Mat, Scalar};

use super::plan::WinogradPlan;

/// Output region produced by one tile, already cropped to the valid extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputWindow {
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
}

/// Row-major walk of `n x n` input tiles at stride `m` with line-buffer
/// accounting.
///
/// Horizontally adjacent tiles share `(r - 1) x n` elements per channel; the
/// shared block is counted as reused, the rest as fetched. Vertical overlap is
/// refetched (the buffer holds one tile row at a time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileStream {
    n: usize,
    m: usize,
    channels: usize,
    out_height: usize,
    out_width: usize,
    tiles_y: usize,
    tiles_x: usize,
    origins: Vec<(usize, usize)>,
    fetched: usize,
    reused: usize,
}

/// Plans the tile walk for `x`. The input is implicitly zero-padded on the
/// bottom/right up to the next tile boundary.
pub fn tile_stream<T: Scalar>(x: &FeatureMap<T>, plan: &WinogradPlan) -> TileStream {
    let (m, n, r) = (plan.m(), plan.n(), plan.r());
    let out_height = (x.height() + 1).saturating_sub(r);
    let out_width = (x.width() + 1).saturating_sub(r);
    let tiles_y = out_height.div_ceil(m);
    let tiles_x = out_width.div_ceil(m);
    let mut origins = Vec::with_capacity(tiles_y * tiles_x);
    let (mut fetched, mut reused) = (0, 0);
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            origins.push((ty * m, tx * m));
            if tx == 0 {
                fetched += n * n;
            } else {
                reused += (r - 1) * n;
                fetched += n * n - (r - 1) * n;
            }
        }
    }
    TileStream {
        n,
        m,
        channels: x.channels(),
        out_height,
        out_width,
        tiles_y,
        tiles_x,
        origins,
        fetched: fetched * x.channels(),
        reused: reused * x.channels(),
    }
}

impl TileStream {
    pub fn tile_edge(&self) -> usize {
        self.n
    }

    pub fn stride(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Tile grid as `(rows, cols)`.
    pub fn grid(&self) -> (usize, usize) {
        (self.tiles_y, self.tiles_x)
    }

    pub fn output_extent(&self) -> (usize, usize) {
        (self.out_height, self.out_width)
    }

    /// Top-left input coordinate of each tile, row-major.
    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    pub fn fetched(&self) -> usize {
        self.fetched
    }

    pub fn reused(&self) -> usize {
        self.reused
    }

    /// Elements read by all tiles, counting overlaps once per tile.
    pub fn touched(&self) -> usize {
        self.origins.len() * self.n * self.n * self.channels
    }

    /// Copies tile `index` of `channel`, zero-filling beyond the input edge.
    pub fn tile<T: Scalar>(&self, x: &FeatureMap<T>, index: usize, channel: usize) -> Mat<T> {
        let (y0, x0) = self.origins[index];
        let mut t = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            let y = y0 + i;
            if y >= x.height() {
                break;
            }
            for j in 0..self.n {
                let xx = x0 + j;
                if xx >= x.width() {
                    break;
                }
                t.set(i, j, x.get(channel, y, xx));
            }
        }
        t
    }

    pub fn output_window(&self, index: usize) -> OutputWindow {
        let (y, x) = self.origins[index];
        OutputWindow {
            y,
            x,
            height: self.m.min(self.out_height - y),
            width: self.m.min(self.out_width - x),
        }
    }
}
