use crate::error::{Error, Result};

/// Snaps `x` to the nearest of `2^bits` uniform levels spanning `[lo, hi]`,
/// after clamping. Ties go to the higher level.
pub fn quantize(x: f64, bits: u32, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::domain(format!("quantizer range [{lo}, {hi}] is empty")));
    }
    if bits == 0 || bits > 52 {
        return Err(Error::domain(format!("quantizer needs 1..=52 bits, got {bits}")));
    }
    let steps = ((1u64 << bits) - 1) as f64;
    let t = (x.clamp(lo, hi) - lo) / (hi - lo) * steps;
    let level = (t + 0.5).floor().min(steps);
    if level == steps {
        return Ok(hi);
    }
    Ok(lo + (hi - lo) * level / steps)
}

/// Sign-magnitude quantization: `|x|` on `[0, full_scale]`, sign kept.
///
/// Used wherever the sign travels separately from the analog magnitude
/// (balanced detection, sign-routed weights), so zero stays exact.
pub fn quantize_signed(x: f64, bits: u32, full_scale: f64) -> Result<f64> {
    let q = quantize(x.abs(), bits, 0.0, full_scale)?;
    Ok(if x < 0.0 { -q } else { q })
}

/// Result of fitting an optical power into the detector's dynamic range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clipped {
    pub power_w: f64,
    /// Input exceeded `p_max`.
    pub saturated: bool,
    /// Input fell below the SNR = 1 floor and was raised to it.
    pub below_floor: bool,
}

/// Floor of a `dr_db` dynamic range below `p_max`.
pub fn dynamic_range_floor(p_max: f64, dr_db: f64) -> f64 {
    p_max * 10f64.powf(-dr_db / 10.0)
}

/// Bounds `p` to `[p_max 10^(-dr/10), p_max]`.
pub fn clip_dynamic_range(p: f64, p_max: f64, dr_db: f64) -> Clipped {
    let floor = dynamic_range_floor(p_max, dr_db);
    if p > p_max {
        Clipped {
            power_w: p_max,
            saturated: true,
            below_floor: false,
        }
    } else if p < floor {
        Clipped {
            power_w: floor,
            saturated: false,
            below_floor: true,
        }
    } else {
        Clipped {
            power_w: p,
            saturated: false,
            below_floor: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_levels() {
        for bits in [1, 4, 6, 8] {
            assert_eq!(quantize(-0.3, bits, -0.3, 2.0).unwrap(), -0.3);
            assert_eq!(quantize(2.0, bits, -0.3, 2.0).unwrap(), 2.0);
        }
    }

    #[test]
    fn tie_rounds_up() {
        assert_eq!(quantize(0.5, 6, 0.0, 1.0).unwrap(), 32.0 / 63.0);
    }

    #[test]
    fn half_step_bound() {
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let q = quantize(x, 6, 0.0, 1.0).unwrap();
            assert!((q - x).abs() <= 1.0 / 126.0 + 1e-15, "x = {x}");
        }
    }

    #[test]
    fn clamps_out_of_range() {
        assert_eq!(quantize(5.0, 3, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(quantize(-5.0, 3, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bad_range_rejected() {
        assert!(quantize(0.0, 6, 1.0, 1.0).is_err());
        assert!(quantize(0.0, 6, 2.0, 1.0).is_err());
        assert!(quantize(0.0, 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn signed_keeps_zero() {
        assert_eq!(quantize_signed(0.0, 6, 1.0).unwrap(), 0.0);
        assert_eq!(quantize_signed(-0.5, 6, 1.0).unwrap(), -32.0 / 63.0);
    }

    #[test]
    fn dynamic_range_examples() {
        let p_max = 1e-3;
        assert_eq!(clip_dynamic_range(p_max / 2.0, p_max, 20.0).power_w, p_max / 2.0);
        assert!((dynamic_range_floor(p_max, 20.0) - p_max / 100.0).abs() < 1e-18);
        let c = clip_dynamic_range(p_max * 1e-4, p_max, 20.0);
        assert!(c.below_floor);
        assert!((c.power_w - p_max * 1e-2).abs() < 1e-18);
        let c = clip_dynamic_range(2.0 * p_max, p_max, 20.0);
        assert!(c.saturated && c.power_w == p_max);
    }
}
