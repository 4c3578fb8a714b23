use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, FilterBank, Mat, Scalar};

use super::plan::{PlanMats, WinogradPlan};
use super::tiles::tile_stream;

/// Valid, stride-1 cross-correlation summed over input channels.
///
/// This is the brute-force reference every fast path is checked against.
pub fn conv2d_direct<T: Scalar>(x: &FeatureMap<T>, f: &FilterBank<T>) -> Result<FeatureMap<T>> {
    if x.channels() != f.channels() {
        return Err(Error::dim(format!(
            "input has {} channels, filters expect {}",
            x.channels(),
            f.channels()
        )));
    }
    let r = f.edge();
    if x.height() < r || x.width() < r {
        return Err(Error::dim(format!(
            "{}x{} input is smaller than the {r}x{r} filter",
            x.height(),
            x.width()
        )));
    }
    let (oh, ow) = (x.height() - r + 1, x.width() - r + 1);
    let mut y = FeatureMap::zeros(f.count(), oh, ow);
    for k in 0..f.count() {
        for p in 0..oh {
            for q in 0..ow {
                let mut acc = T::zero();
                for c in 0..x.channels() {
                    for i in 0..r {
                        for j in 0..r {
                            acc = acc + x.get(c, p + i, q + j) * f.get(k, c, i, j);
                        }
                    }
                }
                y.set(k, p, q, acc);
            }
        }
    }
    Ok(y)
}

/// Winograd-domain filters `G g G^T` for a whole layer, computed once.
#[derive(Debug, Clone)]
pub struct TransformedFilters<T: Scalar = f64> {
    count: usize,
    channels: usize,
    n: usize,
    tiles: Vec<Mat<T>>,
}

impl<T: Scalar> TransformedFilters<T> {
    pub fn new(plan: &WinogradPlan, f: &FilterBank<T>) -> Result<Self> {
        if f.edge() != plan.r() {
            return Err(Error::dim(format!(
                "plan F({}, {}) cannot take {}x{} filters",
                plan.m(),
                plan.r(),
                f.edge(),
                f.edge()
            )));
        }
        let mats: PlanMats<T> = plan.cast();
        let mut tiles = Vec::with_capacity(f.count() * f.channels());
        for k in 0..f.count() {
            for c in 0..f.channels() {
                tiles.push(mats.g.matmul(&f.kernel(k, c))?.matmul(&mats.gt)?);
            }
        }
        Ok(TransformedFilters {
            count: f.count(),
            channels: f.channels(),
            n: plan.n(),
            tiles,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, filter: usize, channel: usize) -> &Mat<T> {
        &self.tiles[filter * self.channels + channel]
    }

    pub fn max_abs(&self) -> T {
        self.tiles
            .iter()
            .fold(T::zero(), |acc, t| acc.max(t.max_abs()))
    }
}

/// Per-layer magnitudes of the Winograd-domain operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerScales {
    /// Largest `|U|` over the layer's transformed filters.
    pub filter_max: f64,
    /// Largest `|V|` over the layer's transformed input tiles.
    pub input_max: f64,
}

/// Identifies one element-wise multiply inside a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileSite {
    pub tile: usize,
    pub channel: usize,
    pub filter: usize,
}

/// The element-wise stage of the Winograd pipeline. Implementations must be
/// deterministic per site so results do not depend on scheduling.
pub trait TileMultiplier<T: Scalar>: Sync {
    fn multiply(&self, scales: &LayerScales, site: TileSite, u: &Mat<T>, v: &Mat<T>)
        -> Result<Mat<T>>;
}

/// Exact Hadamard product.
#[derive(Debug, Clone, Copy, Default)]
pub struct DigitalEwmm;

impl<T: Scalar> TileMultiplier<T> for DigitalEwmm {
    fn multiply(&self, _: &LayerScales, _: TileSite, u: &Mat<T>, v: &Mat<T>) -> Result<Mat<T>> {
        hadamard(u, v)
    }
}

pub(crate) fn hadamard<T: Scalar>(u: &Mat<T>, v: &Mat<T>) -> Result<Mat<T>> {
    if u.shape() != v.shape() {
        return Err(Error::dim("element-wise operands differ in shape"));
    }
    let data = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&a, &b)| a * b)
        .collect();
    Mat::from_vec(u.rows(), u.cols(), data)
}

/// Tiled Winograd convolution; same contract as [`conv2d_direct`].
pub fn winograd_conv2d<T: Scalar>(
    x: &FeatureMap<T>,
    f: &FilterBank<T>,
    plan: &WinogradPlan,
) -> Result<FeatureMap<T>> {
    let filters = TransformedFilters::new(plan, f)?;
    winograd_conv2d_with(x, &filters, plan, &DigitalEwmm)
}

/// Tiled Winograd convolution with pre-transformed filters and a pluggable
/// element-wise stage.
///
/// Loop order per tile is channel then filter; each product is taken back to
/// the spatial domain before channels are accumulated. Tiles run in parallel
/// and are written back in order, so the result is schedule-independent.
pub fn winograd_conv2d_with<T: Scalar, M: TileMultiplier<T>>(
    x: &FeatureMap<T>,
    filters: &TransformedFilters<T>,
    plan: &WinogradPlan,
    multiplier: &M,
) -> Result<FeatureMap<T>> {
    if x.channels() != filters.channels() {
        return Err(Error::dim(format!(
            "input has {} channels, filters expect {}",
            x.channels(),
            filters.channels()
        )));
    }
    if filters.n != plan.n() {
        return Err(Error::dim("filters were transformed with a different plan"));
    }
    let r = plan.r();
    if x.height() < r || x.width() < r {
        return Err(Error::dim(format!(
            "{}x{} input is smaller than the {r}x{r} filter",
            x.height(),
            x.width()
        )));
    }
    let mats: PlanMats<T> = plan.cast();
    let stream = tile_stream(x, plan);

    let inputs: Vec<Vec<Mat<T>>> = (0..stream.len())
        .into_par_iter()
        .map(|t| {
            (0..x.channels())
                .map(|c| {
                    let d = stream.tile(x, t, c);
                    mats.bt.matmul(&d)?.matmul(&mats.b)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let input_max = inputs
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.max_abs()));
    let scales = LayerScales {
        filter_max: filters.max_abs().to_f64().unwrap_or(0.0),
        input_max: input_max.to_f64().unwrap_or(0.0),
    };

    let m = plan.m();
    let outputs: Vec<Vec<Mat<T>>> = inputs
        .par_iter()
        .enumerate()
        .map(|(t, vs)| {
            let mut acc = vec![Mat::zeros(m, m); filters.count()];
            for (c, v) in vs.iter().enumerate() {
                for (k, acc_k) in acc.iter_mut().enumerate() {
                    let site = TileSite {
                        tile: t,
                        channel: c,
                        filter: k,
                    };
                    let prod = multiplier.multiply(&scales, site, filters.get(k, c), v)?;
                    let y = mats.at.matmul(&prod)?.matmul(&mats.a)?;
                    for (a, b) in acc_k.as_mut_slice().iter_mut().zip(y.as_slice()) {
                        *a = *a + *b;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let (oh, ow) = stream.output_extent();
    let mut y = FeatureMap::zeros(filters.count(), oh, ow);
    for (t, tile_out) in outputs.iter().enumerate() {
        let win = stream.output_window(t);
        for (k, block) in tile_out.iter().enumerate() {
            for i in 0..win.height {
                for j in 0..win.width {
                    y.set(k, win.y + i, win.x + j, block.get(i, j));
                }
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winograd::make_plan;
    use rand::Rng;

    fn random_map(c: usize, h: usize, w: usize, rng: &mut impl Rng) -> FeatureMap {
        FeatureMap::from_vec(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn random_bank(n: usize, c: usize, rng: &mut impl Rng) -> FilterBank {
        FilterBank::from_vec(n, c, 3, (0..n * c * 9).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn direct_all_ones() {
        let x = FeatureMap::from_vec(1, 4, 4, vec![1.0; 16]).unwrap();
        let f = FilterBank::from_vec(1, 1, 3, vec![1.0; 9]).unwrap();
        let y = conv2d_direct(&x, &f).unwrap();
        assert_eq!((y.height(), y.width()), (2, 2));
        assert!(y.as_slice().iter().all(|&v| v == 9.0));
    }

    #[test]
    fn direct_sums_over_channels() {
        let mut rng = crate::seed::rng(5);
        let x = random_map(2, 5, 5, &mut rng);
        let f = random_bank(1, 2, &mut rng);
        let y = conv2d_direct(&x, &f).unwrap();
        let mut sum = FeatureMap::zeros(1, 3, 3);
        for c in 0..2 {
            let xc = FeatureMap::from_vec(1, 5, 5, x.channel(c).to_vec()).unwrap();
            let fc = FilterBank::from_vec(1, 1, 3, f.kernel(0, c).as_slice().to_vec()).unwrap();
            let yc = conv2d_direct(&xc, &fc).unwrap();
            for (s, v) in sum.as_mut_slice().iter_mut().zip(yc.as_slice()) {
                *s += v;
            }
        }
        assert!(y.max_abs_diff(&sum) < 1e-14);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let x = FeatureMap::<f64>::zeros(2, 6, 6);
        let f = FilterBank::<f64>::zeros(1, 3, 3);
        assert!(matches!(conv2d_direct(&x, &f), Err(Error::Dimension(_))));
        assert!(matches!(
            winograd_conv2d(&x, &f, &make_plan(4, 3).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn plan_filter_mismatch_is_rejected() {
        let x = FeatureMap::<f64>::zeros(1, 8, 8);
        let f = FilterBank::<f64>::zeros(1, 1, 5);
        assert!(winograd_conv2d(&x, &f, &make_plan(4, 3).unwrap()).is_err());
    }

    #[test]
    fn zero_filters_give_zero_output() {
        let mut rng = crate::seed::rng(1);
        let x = random_map(3, 9, 11, &mut rng);
        let f = FilterBank::zeros(4, 3, 3);
        let y = winograd_conv2d(&x, &f, &make_plan(4, 3).unwrap()).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_tile_matches_direct() {
        let mut rng = crate::seed::rng(2);
        let x = random_map(1, 6, 6, &mut rng);
        let f = random_bank(1, 1, &mut rng);
        let y = winograd_conv2d(&x, &f, &make_plan(4, 3).unwrap()).unwrap();
        assert!(y.max_abs_diff(&conv2d_direct(&x, &f).unwrap()) < 1e-10);
    }

    #[test]
    fn ragged_extent_is_padded_and_cropped() {
        let mut rng = crate::seed::rng(4);
        let plan = make_plan(4, 3).unwrap();
        for (h, w) in [(18, 18), (17, 17), (9, 13)] {
            let x = random_map(3, h, w, &mut rng);
            let f = random_bank(8, 3, &mut rng);
            let y = winograd_conv2d(&x, &f, &plan).unwrap();
            let yd = conv2d_direct(&x, &f).unwrap();
            assert_eq!((y.height(), y.width()), (h - 2, w - 2));
            assert!(y.max_abs_diff(&yd) < 1e-10);
        }
    }

    #[test]
    fn random_layer_matches_direct() {
        let mut rng = crate::seed::rng(9);
        let x = random_map(3, 8, 8, &mut rng);
        let f = random_bank(4, 3, &mut rng);
        let yd = conv2d_direct(&x, &f).unwrap();
        for (m, r) in [(2, 3), (4, 3)] {
            let y = winograd_conv2d(&x, &f, &make_plan(m, r).unwrap()).unwrap();
            assert!(y.max_abs_diff(&yd) < 1e-10);
        }
    }

    #[test]
    fn single_precision_within_tolerance() {
        let mut rng = crate::seed::rng(10);
        let x = random_map(4, 20, 20, &mut rng);
        let f = random_bank(8, 4, &mut rng);
        let yd = conv2d_direct(&x, &f).unwrap();
        let y32 = winograd_conv2d(&x.cast::<f32>(), &f.cast::<f32>(), &make_plan(4, 3).unwrap())
            .unwrap();
        assert!(y32.cast::<f64>().max_abs_diff(&yd) < 1e-3);
    }

    #[test]
    fn layer_scales_track_operands() {
        struct Probe;
        impl TileMultiplier<f64> for Probe {
            fn multiply(&self, s: &LayerScales, _: TileSite, u: &Mat, v: &Mat) -> Result<Mat> {
                assert!(u.max_abs() <= s.filter_max && v.max_abs() <= s.input_max);
                hadamard(u, v)
            }
        }
        let mut rng = crate::seed::rng(12);
        let x = random_map(2, 10, 10, &mut rng);
        let f = random_bank(3, 2, &mut rng);
        let plan = make_plan(4, 3).unwrap();
        let tf = TransformedFilters::new(&plan, &f).unwrap();
        winograd_conv2d_with(&x, &tf, &plan, &Probe).unwrap();
    }
}
