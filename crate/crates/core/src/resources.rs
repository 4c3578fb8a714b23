//! Static feasibility analysis: wavelength budget, ring and detector counts,
//! connection limit and memristive weight-storage footprint.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf::LayerSpec;
use crate::photonic::DeviceParams;
use crate::winograd::WinogradPlan;

/// Independent connections one weight bank supports (108 channels squared).
pub const CONNECTION_LIMIT: usize = 108 * 108;

/// Weights of the reference layer used in the area comparison (384 x 256 x 3 x 3).
pub const REFERENCE_WEIGHT_COUNT: usize = 884_736;
/// Published bound for that layer's memristor footprint, cm^2.
pub const CLAIMED_AREA_CM2: f64 = 0.25;

/// Kernel-size mix of common CNNs: name, 1x1 %, 3x3 %, small 1D %, 5x5 %.
pub const KERNEL_BREAKDOWN: [(&str, f64, f64, f64, f64); 6] = [
    ("GoogLeNet", 64.9, 17.5, 1.7, 15.9),
    ("Inception V3", 43.2, 17.9, 35.7, 3.2),
    ("Inception V4", 40.9, 16.1, 43.0, 0.0),
    ("MobileNet", 93.3, 6.7, 0.0, 0.0),
    ("ResNet50", 68.5, 29.6, 1.9, 0.0),
    ("VGG16", 0.0, 100.0, 0.0, 0.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelBudget {
    pub wavelengths: usize,
    pub max: usize,
    pub feasible: bool,
    /// Passes needed when channels are served `max` at a time.
    pub batching: usize,
}

/// One wavelength per input channel.
pub fn channel_budget(channels: usize, dev: &DeviceParams) -> Result<ChannelBudget> {
    if channels == 0 {
        return Err(Error::domain("channel count must be >= 1"));
    }
    let max = dev.channel_count_max;
    Ok(ChannelBudget {
        wavelengths: channels,
        max,
        feasible: channels <= max,
        batching: channels.div_ceil(max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MrrCount {
    /// One ring per element-wise multiply, `n^2` per path.
    pub ewmm: usize,
    /// Lower bound for rings realizing the input transform, `n^2` per path.
    pub input_transform_lower_bound: usize,
}

pub fn mrr_count(plan: &WinogradPlan, paths: usize) -> Result<MrrCount> {
    if paths == 0 {
        return Err(Error::domain("paths must be >= 1"));
    }
    let per_path = plan.n() * plan.n();
    Ok(MrrCount {
        ewmm: per_path * paths,
        input_transform_lower_bound: per_path * paths,
    })
}

/// Footprint of `weight_count` square cells of edge `cell_edge_m`, in cm^2.
pub fn memristor_area(weight_count: usize, cell_edge_m: f64) -> Result<f64> {
    if weight_count == 0 || !(cell_edge_m > 0.0) {
        return Err(Error::domain("weight count and cell edge must be positive"));
    }
    Ok(weight_count as f64 * cell_edge_m * cell_edge_m * 1e4)
}

/// Text contrasting the computed footprint with the published bound.
pub fn area_discrepancy_note(weight_count: usize, cell_edge_m: f64) -> Result<String> {
    let area = memristor_area(weight_count, cell_edge_m)?;
    let edge_for_claim = (CLAIMED_AREA_CM2 * 1e-4 / weight_count as f64).sqrt();
    let small = memristor_area(weight_count, 5e-6)?;
    let verdict = if area < CLAIMED_AREA_CM2 { "consistent with" } else { "contradicts" };
    Ok(format!(
        "{weight_count} cells at {:.1} um edge occupy {area:.2} cm², which {verdict} the published \
         bound of less than {CLAIMED_AREA_CM2} cm²; that bound needs a cell edge below {:.2} um \
         (5 um cells give {small:.3} cm²)",
        cell_edge_m * 1e6,
        edge_for_claim * 1e6
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Channels { used: usize, max: usize, batching: usize },
    Connections { used: usize, max: usize },
    DynamicRange { required_db: f64, available_db: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Channels { used, max, batching } => {
                write!(f, "channels {used}>{max} (batch x{batching})")
            }
            Violation::Connections { used, max } => write!(f, "connections {used}>{max}"),
            Violation::DynamicRange {
                required_db,
                available_db,
            } => write!(f, "dynamic range {required_db:.2} dB>{available_db:.2} dB"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerResources {
    pub name: String,
    pub wavelengths: usize,
    pub channel_batching: usize,
    pub mrr_ewmm: usize,
    pub mrr_input_transform_lower_bound: usize,
    pub photodiodes: usize,
    /// `channels * filters`.
    pub connections: usize,
    /// Transformed filter values held in memristors, `filters * channels * n^2`.
    pub memristor_cells: usize,
    pub memristor_area_cm2: f64,
    pub violations: Vec<Violation>,
}

impl LayerResources {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub layers: Vec<LayerResources>,
    pub total_memristor_cells: usize,
    pub total_memristor_area_cm2: f64,
    pub area_note: String,
}

impl ResourceReport {
    pub fn feasible(&self) -> bool {
        self.layers.iter().all(LayerResources::feasible)
    }
}

/// Resolution a `bits`-bit weight needs from the detector, in dB.
pub fn required_dynamic_range_db(bits: u32) -> f64 {
    10.0 * (((1u64 << bits) - 1) as f64).log10()
}

/// Per-layer resource use and constraint verdicts.
pub fn feasibility(
    layers: &[LayerSpec],
    dev: &DeviceParams,
    paths: usize,
    cell_edge_m: f64,
    reference_weight_count: usize,
) -> Result<ResourceReport> {
    if layers.is_empty() {
        return Err(Error::domain("network has no layers"));
    }
    let required_db = required_dynamic_range_db(dev.memristor_bits);
    let mut rows = Vec::with_capacity(layers.len());
    for l in layers {
        l.validate()?;
        let plan = l.plan()?;
        let n2 = plan.n() * plan.n();
        let budget = channel_budget(l.channels, dev)?;
        let rings = mrr_count(&plan, paths)?;
        let connections = l.channels * l.filters;
        let cells = l.filters * l.channels * n2;

        let mut violations = Vec::new();
        if !budget.feasible {
            violations.push(Violation::Channels {
                used: budget.wavelengths,
                max: budget.max,
                batching: budget.batching,
            });
        }
        if connections > CONNECTION_LIMIT {
            violations.push(Violation::Connections {
                used: connections,
                max: CONNECTION_LIMIT,
            });
        }
        if required_db > dev.dynamic_range_db {
            violations.push(Violation::DynamicRange {
                required_db,
                available_db: dev.dynamic_range_db,
            });
        }
        rows.push(LayerResources {
            name: l.name.clone(),
            wavelengths: budget.wavelengths,
            channel_batching: budget.batching,
            mrr_ewmm: rings.ewmm,
            mrr_input_transform_lower_bound: rings.input_transform_lower_bound,
            photodiodes: n2 * paths,
            connections,
            memristor_cells: cells,
            memristor_area_cm2: memristor_area(cells, cell_edge_m)?,
            violations,
        });
    }
    let total_memristor_cells = rows.iter().map(|r| r.memristor_cells).sum();
    Ok(ResourceReport {
        total_memristor_area_cm2: memristor_area(total_memristor_cells, cell_edge_m)?,
        total_memristor_cells,
        area_note: area_discrepancy_note(reference_weight_count, cell_edge_m)?,
        layers: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winograd::make_plan;

    #[test]
    fn channel_examples() {
        let dev = DeviceParams::default();
        let b = channel_budget(3, &dev).unwrap();
        assert!(b.feasible && b.wavelengths == 3);
        assert!(channel_budget(50, &dev).unwrap().feasible);
        assert!(!channel_budget(51, &dev).unwrap().feasible);
        let b = channel_budget(512, &dev).unwrap();
        assert!(!b.feasible);
        assert_eq!(b.batching, 11);
        assert!(channel_budget(0, &dev).is_err());
    }

    #[test]
    fn ring_counts() {
        let p43 = make_plan(4, 3).unwrap();
        let p23 = make_plan(2, 3).unwrap();
        assert_eq!(mrr_count(&p43, 1).unwrap().ewmm, 36);
        assert_eq!(mrr_count(&p23, 1).unwrap().ewmm, 16);
        assert_eq!(mrr_count(&p43, 100).unwrap().ewmm, 3600);
        assert!(mrr_count(&p43, 0).is_err());
    }

    #[test]
    fn area_examples() {
        assert!((memristor_area(1, 50e-6).unwrap() - 2.5e-5).abs() < 1e-18);
        let a = memristor_area(REFERENCE_WEIGHT_COUNT, 50e-6).unwrap();
        assert!((a - 22.1184).abs() < 1e-9);
        let b = memristor_area(REFERENCE_WEIGHT_COUNT, 5e-6).unwrap();
        assert!((b - 0.221184).abs() < 1e-12);
    }

    #[test]
    fn note_names_the_gap() {
        let note = area_discrepancy_note(REFERENCE_WEIGHT_COUNT, 50e-6).unwrap();
        assert!(note.contains("22.12"), "{note}");
        assert!(note.contains("less than 0.25 cm²"), "{note}");
        assert!(note.contains("0.221"), "{note}");
    }

    #[test]
    fn tiny_layer_is_feasible() {
        let dev = DeviceParams::default();
        let r = feasibility(&[LayerSpec::new("t", 8, 8, 3, 8)], &dev, 100, 50e-6, REFERENCE_WEIGHT_COUNT)
            .unwrap();
        assert!(r.feasible());
        assert_eq!(r.layers[0].wavelengths, 3);
        assert_eq!(r.layers[0].memristor_cells, 8 * 3 * 36);
    }

    #[test]
    fn deep_layer_violations() {
        let dev = DeviceParams::default();
        let r = feasibility(&[LayerSpec::new("deep", 28, 28, 512, 512)], &dev, 100, 50e-6, 1).unwrap();
        assert!(!r.feasible());
        let v = &r.layers[0].violations;
        assert!(v.contains(&Violation::Channels {
            used: 512,
            max: 50,
            batching: 11
        }));
        assert!(v.contains(&Violation::Connections {
            used: 512 * 512,
            max: CONNECTION_LIMIT
        }));
    }

    #[test]
    fn dynamic_range_constraint() {
        assert!((required_dynamic_range_db(6) - 17.9934).abs() < 1e-3);
        let dev = DeviceParams {
            memristor_bits: 8,
            ..DeviceParams::default()
        };
        let r = feasibility(&[LayerSpec::new("t", 8, 8, 3, 8)], &dev, 1, 50e-6, 1).unwrap();
        assert!(matches!(
            r.layers[0].violations[0],
            Violation::DynamicRange { .. }
        ));
    }
}
