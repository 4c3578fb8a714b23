use crate::error::Result;
use crate::tensor::FeatureMap;

use super::model::{cross_entropy, ForwardNoise, SmallCnn};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `||analytic - numeric|| / max(||analytic||, ||numeric||)`.
    pub relative_error: f64,
}

fn clean_loss(model: &SmallCnn, x: &FeatureMap, label: usize) -> Result<f64> {
    Ok(cross_entropy(&model.forward(x, &ForwardNoise::clean(), None)?, label).0)
}

/// Compares backpropagated gradients of the clean loss with central
/// differences of step `h`.
pub fn gradient_check(model: &SmallCnn, x: &FeatureMap, label: usize, h: f64) -> Result<GradCheck> {
    let trace = model.trace(x, &ForwardNoise::clean(), None)?;
    let analytic = model.backward(x, &trace, label)?.1.flatten();

    let base = model.parameters();
    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + h;
        probe.set_parameters(&p)?;
        let up = clean_loss(&probe, x, label)?;
        p[i] = base[i] - h;
        probe.set_parameters(&p)?;
        let down = clean_loss(&probe, x, label)?;
        p[i] = base[i];
        numeric.push((up - down) / (2.0 * h));
    }

    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let scale = norm(&analytic).max(norm(&numeric));
    let relative_error = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
    Ok(GradCheck {
        analytic,
        numeric,
        relative_error,
    })
}
