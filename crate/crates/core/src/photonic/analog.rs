//! Analog element-wise multiply through the photonic path.
//!
//! Per element: the transformed input sets a laser amplitude through the DAC,
//! the transformed filter value (held by a memristor) sets a ring's
//! transmission, the weighted light is detected by a balanced photodiode and
//! the current is digitized. Operands enter normalized to `[-1, 1]` by
//! per-layer max-abs scale factors; the scale factors are applied digitally.
//! Signs are carried sign-magnitude: negative weights route to the opposite
//! arm of the balanced pair.

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Mat;
use crate::winograd::{LayerScales, TileMultiplier, TileSite};

use super::detector::photodiode_sum;
use super::device::DeviceParams;
use super::quantize::{clip_dynamic_range, quantize_signed};

/// Signed optical power after a ring programmed to weight `w`.
///
/// Magnitude is `|w| p_in 10^(-IL/10)`; the sign selects the detector arm.
pub fn mrr_weight(w: f64, p_in: f64, dev: &DeviceParams) -> Result<f64> {
    if !(w.abs() <= 1.0) {
        return Err(Error::Normalization(w));
    }
    if p_in < 0.0 {
        return Err(Error::domain(format!("input power must be >= 0, got {p_in}")));
    }
    Ok(w * p_in * dev.ring_transmission())
}

/// Adds a fixed fraction of each channel's power to its two neighbours.
pub fn crosstalk_leak(powers: &[f64], fraction: f64) -> Vec<f64> {
    (0..powers.len())
        .map(|i| {
            let left = if i > 0 { powers[i - 1] } else { 0.0 };
            let right = powers.get(i + 1).copied().unwrap_or(0.0);
            powers[i] + fraction * (left + right)
        })
        .collect()
}

/// Scale factors mapping each operand onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperandScales {
    /// Applied to the filter (weight) operand `u`.
    pub weight: f64,
    /// Applied to the input operand `v`.
    pub input: f64,
}

impl OperandScales {
    /// Per-matrix max-abs scaling.
    pub fn of(u: &Mat, v: &Mat) -> Self {
        OperandScales {
            weight: u.max_abs(),
            input: v.max_abs(),
        }
    }
}

impl From<LayerScales> for OperandScales {
    fn from(s: LayerScales) -> Self {
        OperandScales {
            weight: s.filter_max,
            input: s.input_max,
        }
    }
}

fn normalize(x: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        x / scale
    }
}

/// Simulates `u . v` on the analog path. With every impairment disabled this
/// reproduces the digital product to rounding.
pub fn analog_ewmm(
    u: &Mat,
    v: &Mat,
    scales: OperandScales,
    dev: &DeviceParams,
    rng_seed: u64,
) -> Result<Mat> {
    if u.shape() != v.shape() {
        return Err(Error::dim(format!(
            "element-wise product of {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let elements = u.rows() * u.cols();
    if elements > dev.channel_count_max {
        return Err(Error::Capacity {
            used: elements,
            max: dev.channel_count_max,
        });
    }
    if !(scales.weight >= 0.0 && scales.input >= 0.0) {
        return Err(Error::domain("normalization scales must be non-negative"));
    }
    let imp = dev.impairments;
    let p_laser = dev.laser_power_per_channel_w;
    let full_scale_power = p_laser * dev.ring_transmission();
    let gain = dev.responsivity() * full_scale_power;
    if !(gain > 0.0) {
        return Err(Error::domain(
            "analog path needs positive responsivity, laser power and transmission",
        ));
    }

    let mut powers = Vec::with_capacity(elements);
    for (&a, &b) in u.as_slice().iter().zip(v.as_slice()) {
        let mut w = normalize(a, scales.weight);
        let mut x = normalize(b, scales.input);
        if imp.memristor_quantization {
            w = quantize_signed(w, dev.memristor_bits, 1.0)?;
        }
        if imp.dac_quantization {
            x = quantize_signed(x, dev.dac_bits, 1.0)?;
        }
        let p = mrr_weight(w, x.abs() * p_laser, dev)?;
        powers.push(if x < 0.0 { -p } else { p });
    }
    if imp.crosstalk {
        powers = crosstalk_leak(&powers, dev.crosstalk_fraction());
    }

    let rescale = scales.weight * scales.input;
    let mut out = Vec::with_capacity(elements);
    for (i, &p) in powers.iter().enumerate() {
        let p = if imp.dynamic_range {
            let c = clip_dynamic_range(p.abs(), full_scale_power, dev.dynamic_range_db);
            c.power_w.copysign(p)
        } else {
            p
        };
        let current = photodiode_sum(&[p], dev, seed::derive(rng_seed, &[i as u64]))?;
        let mut y = current / gain;
        if imp.adc_quantization {
            y = quantize_signed(y, dev.adc_bits, 1.0)?;
        }
        out.push(y * rescale);
    }
    Mat::from_vec(u.rows(), u.cols(), out)
}

/// [`TileMultiplier`] running every element-wise product through
/// [`analog_ewmm`] with per-layer scales and per-site seeds.
#[derive(Debug, Clone)]
pub struct AnalogEwmm {
    pub device: DeviceParams,
    pub seed: u64,
}

impl AnalogEwmm {
    pub fn new(device: DeviceParams, seed: u64) -> Self {
        AnalogEwmm { device, seed }
    }
}

impl TileMultiplier<f64> for AnalogEwmm {
    fn multiply(&self, scales: &LayerScales, site: TileSite, u: &Mat, v: &Mat) -> Result<Mat> {
        let site_seed = seed::derive(
            self.seed,
            &[site.tile as u64, site.channel as u64, site.filter as u64],
        );
        analog_ewmm(u, v, (*scales).into(), &self.device, site_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonic::Impairments;
    use crate::winograd::ewmm;
    use rand::Rng;

    fn random(n: usize, rng: &mut impl Rng) -> Mat {
        Mat::from_vec(n, n, (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
    }

    #[test]
    fn mrr_examples() {
        let mut dev = DeviceParams::default();
        assert_eq!(mrr_weight(0.0, 1e-3, &dev).unwrap(), 0.0);
        let p = mrr_weight(-0.5, 1e-3, &dev).unwrap();
        assert!((p - (-0.5 * 10f64.powf(-0.2) * 1e-3)).abs() < 1e-18);
        assert!((p + 0.3155e-3).abs() < 1e-7);
        dev.insertion_loss_db = 0.0;
        assert_eq!(mrr_weight(1.0, 1e-3, &dev).unwrap(), 1e-3);
        assert_eq!(
            mrr_weight(1.5, 1e-3, &dev).unwrap_err(),
            Error::Normalization(1.5)
        );
    }

    #[test]
    fn crosstalk_leaks_ten_percent_to_neighbours() {
        let dev = DeviceParams::default();
        let out = crosstalk_leak(&[0.0, 1.0, 0.0], dev.crosstalk_fraction());
        assert!((out[0] - 0.1).abs() < 1e-15);
        assert_eq!(out[1], 1.0);
        assert!((out[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ideal_path_matches_digital() {
        let dev = DeviceParams::ideal();
        let mut rng = crate::seed::rng(1);
        for _ in 0..50 {
            let u = random(6, &mut rng);
            let v = random(6, &mut rng).map(|x| 7.0 * x);
            let a = analog_ewmm(&u, &v, OperandScales::of(&u, &v), &dev, 3).unwrap();
            let d = ewmm(&u, &v).unwrap();
            assert!(a.max_abs_diff(&d) < 1e-12);
        }
    }

    #[test]
    fn weight_quantization_bound() {
        let dev = DeviceParams {
            impairments: Impairments {
                memristor_quantization: true,
                ..Impairments::none()
            },
            ..DeviceParams::default()
        };
        let mut rng = crate::seed::rng(2);
        for _ in 0..200 {
            let u = random(6, &mut rng);
            let v = random(6, &mut rng);
            let a = analog_ewmm(&u, &v, OperandScales::of(&u, &v), &dev, 0).unwrap();
            let err = a.max_abs_diff(&ewmm(&u, &v).unwrap());
            assert!(err <= v.max_abs() / 63.0 + 1e-15);
        }
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let dev = DeviceParams::default();
        let mut rng = crate::seed::rng(3);
        let (u, v) = (random(6, &mut rng), random(6, &mut rng));
        let s = OperandScales::of(&u, &v);
        let a = analog_ewmm(&u, &v, s, &dev, 9).unwrap();
        assert_eq!(a, analog_ewmm(&u, &v, s, &dev, 9).unwrap());
        assert_ne!(a, analog_ewmm(&u, &v, s, &dev, 10).unwrap());
    }

    #[test]
    fn crosstalk_in_the_path() {
        let dev = DeviceParams {
            impairments: Impairments {
                crosstalk: true,
                ..Impairments::none()
            },
            ..DeviceParams::default()
        };
        // One active element among three channels.
        let u = Mat::from_vec(1, 3, vec![1.0, 1.0, 1.0]).unwrap();
        let v = Mat::from_vec(1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        let y = analog_ewmm(&u, &v, OperandScales::of(&u, &v), &dev, 0).unwrap();
        assert!((y.get(0, 0) - 0.1).abs() < 1e-12);
        assert!((y.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((y.get(0, 2) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn shape_and_capacity_errors() {
        let dev = DeviceParams::ideal();
        let s = OperandScales {
            weight: 1.0,
            input: 1.0,
        };
        assert!(analog_ewmm(&Mat::zeros(4, 4), &Mat::zeros(6, 6), s, &dev, 0).is_err());
        assert!(matches!(
            analog_ewmm(&Mat::zeros(8, 8), &Mat::zeros(8, 8), s, &dev, 0),
            Err(Error::Capacity { used: 64, max: 50 })
        ));
    }

    #[test]
    fn zero_scales_give_zero() {
        let dev = DeviceParams::default();
        let z = Mat::zeros(4, 4);
        let y = analog_ewmm(&z, &z, OperandScales::of(&z, &z), &dev, 0).unwrap();
        // Only detector noise remains, well below one ADC step.
        assert_eq!(y, z);
    }
}
