use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phases in which a [`NoiseSpec`] is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePhase {
    Training,
    Inference,
    Both,
    None,
}

/// Inference-time weight noise: one perturbation per evaluation pass, or a
/// fresh one for every forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightNoiseMode {
    #[default]
    Fixed,
    Redraw,
}

/// Reference swing for output-noise sigma: each layer's own, or the largest
/// over all layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwingScope {
    #[default]
    PerLayer,
    Global,
}

/// Gaussian noise injected into the network.
///
/// Output noise has sigma `output_noise_frac * swing` where swing is the
/// calibrated max |activation| of the layer. Weight noise has sigma
/// `weight_noise_frac * max|w|` of the layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub output_noise_frac: f64,
    pub weight_noise_frac: f64,
    pub seed: u64,
    pub enabled_in: NoisePhase,
    pub weight_mode: WeightNoiseMode,
    pub swing: SwingScope,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            output_noise_frac: 0.0,
            weight_noise_frac: 0.0,
            seed: 0,
            enabled_in: NoisePhase::None,
            weight_mode: WeightNoiseMode::Fixed,
            swing: SwingScope::PerLayer,
        }
    }

    pub fn output(frac: f64, seed: u64, enabled_in: NoisePhase) -> Self {
        NoiseSpec {
            output_noise_frac: frac,
            seed,
            enabled_in,
            ..NoiseSpec::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("output_noise_frac", self.output_noise_frac),
            ("weight_noise_frac", self.weight_noise_frac),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn in_training(&self) -> bool {
        matches!(self.enabled_in, NoisePhase::Training | NoisePhase::Both)
    }

    pub fn in_inference(&self) -> bool {
        matches!(self.enabled_in, NoisePhase::Inference | NoisePhase::Both)
    }
}

/// `count` points evenly spaced in log10 between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Sweep levels must be 0 or inside `[1e-4, 1e-2]`.
pub fn validate_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    for &v in grid {
        let ok = v == 0.0 || (1e-4 * (1.0 - 1e-9)..=1e-2 * (1.0 + 1e-9)).contains(&v);
        if !ok {
            return Err(Error::Config(format!(
                "{name} grid level {v} is outside [1e-4, 1e-2] (0 is also allowed)"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_inference_grid() {
        let g = log_grid(1e-4, 1e-2, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[2] - 1e-3).abs() < 1e-15);
        assert!((g[4] - 1e-2).abs() < 1e-15);
        validate_grid("infer", &g).unwrap();
    }

    #[test]
    fn grid_bounds() {
        validate_grid("train", &[0.0, 1e-3, 5e-3]).unwrap();
        assert!(validate_grid("train", &[0.1]).is_err());
        assert!(validate_grid("train", &[]).is_err());
    }

    #[test]
    fn phases() {
        let s = NoiseSpec::output(1e-3, 0, NoisePhase::Both);
        assert!(s.in_training() && s.in_inference());
        assert!(!NoiseSpec::none().in_inference());
        assert!(NoiseSpec {
            weight_noise_frac: -1.0,
            ..NoiseSpec::none()
        }
        .validate()
        .is_err());
    }
}
