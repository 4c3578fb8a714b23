use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::{photodiode_power, DeviceParams};
use crate::winograd::WinogradPlan;

use super::timing::{throughput_gops, OpConvention, TimingParams, TimingReport};

/// Power consumers of the accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Laser,
    DacArray,
    AdcArray,
    Photodiodes,
    MrrTuning,
    MemoryIo,
    FilterTransformDsp,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::Laser,
        Component::DacArray,
        Component::AdcArray,
        Component::Photodiodes,
        Component::MrrTuning,
        Component::MemoryIo,
        Component::FilterTransformDsp,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Component::Laser => "laser",
            Component::DacArray => "dac_array",
            Component::AdcArray => "adc_array",
            Component::Photodiodes => "photodiodes",
            Component::MrrTuning => "mrr_tuning",
            Component::MemoryIo => "memory_io",
            Component::FilterTransformDsp => "filter_transform_dsp",
        }
    }

    /// Part of the photonic core (counted in core-only totals).
    pub fn in_core(self) -> bool {
        matches!(
            self,
            Component::Laser | Component::Photodiodes | Component::MrrTuning
        )
    }
}

/// One row of the component power table.
///
/// `energy_per_layer_j` is charged once per layer and spread over the
/// network's wall time; it is meant for the filter-transform DSP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    #[serde(default)]
    pub power_w: f64,
    #[serde(default)]
    pub energy_per_layer_j: f64,
    pub note: String,
}

impl ComponentEntry {
    pub fn watts(power_w: f64, note: &str) -> Self {
        ComponentEntry {
            power_w,
            energy_per_layer_j: 0.0,
            note: note.to_string(),
        }
    }
}

pub type ComponentTable = BTreeMap<String, ComponentEntry>;

/// Placeholder electronics figures used by [`estimate_components`].
pub const DAC_POWER_W: f64 = 50e-3;
pub const ADC_POWER_W: f64 = 50e-3;
pub const RING_TUNING_POWER_W: f64 = 0.1e-3;
pub const MEMORY_ENERGY_J_PER_BIT: f64 = 5e-12;
pub const DSP_ENERGY_PER_LAYER_J: f64 = 1e-6;

/// Component table derived from the device and timing parameters.
///
/// Photonic entries follow from the device constants; the electronic ones
/// use the placeholder figures above and should be replaced with measured
/// values.
pub fn estimate_components(dev: &DeviceParams, p: &TimingParams, plan: &WinogradPlan) -> ComponentTable {
    let channels = (plan.n() * plan.n() * p.parallel_paths) as f64;
    let pd_optical = dev.laser_power_per_channel_w * dev.ring_transmission();
    let mut t = ComponentTable::new();
    let mut put = |c: Component, e: ComponentEntry| {
        t.insert(c.key().to_string(), e);
    };
    put(
        Component::Laser,
        ComponentEntry::watts(
            channels * dev.laser_power_per_channel_w,
            "optical output: n^2 channels per path x paths x per-channel laser power",
        ),
    );
    put(
        Component::Photodiodes,
        ComponentEntry::watts(
            channels * photodiode_power(dev, pd_optical),
            "|bias| x responsivity x full-scale optical power per detector",
        ),
    );
    put(
        Component::MrrTuning,
        ComponentEntry::watts(
            2.0 * channels * RING_TUNING_POWER_W,
            "placeholder: 0.1 mW per ring, input-transform and weight rings",
        ),
    );
    put(
        Component::DacArray,
        ComponentEntry::watts(
            (p.dac_count * p.parallel_paths) as f64 * DAC_POWER_W,
            "placeholder: 50 mW per DAC",
        ),
    );
    put(
        Component::AdcArray,
        ComponentEntry::watts(
            channels * ADC_POWER_W,
            "placeholder: 50 mW per ADC, one per output channel",
        ),
    );
    put(
        Component::MemoryIo,
        ComponentEntry::watts(
            p.mem_bandwidth_bps * MEMORY_ENERGY_J_PER_BIT,
            "placeholder: 5 pJ/bit at the configured memory bandwidth",
        ),
    );
    put(
        Component::FilterTransformDsp,
        ComponentEntry {
            power_w: 0.0,
            energy_per_layer_j: DSP_ENERGY_PER_LAYER_J,
            note: "placeholder: 1 uJ per layer for G g G^T".to_string(),
        },
    );
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLine {
    pub component: Component,
    pub power_w: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub convention: OpConvention,
    pub components: Vec<ComponentLine>,
    pub total_full_w: f64,
    pub total_core_w: f64,
    /// Whole-accelerator throughput (all parallel paths), GOP/s.
    pub throughput_gops: f64,
    pub efficiency_full: f64,
    pub efficiency_core: f64,
}

fn efficiency(gops: f64, watts: f64) -> f64 {
    if watts == 0.0 {
        f64::INFINITY
    } else {
        gops / watts
    }
}

/// Totals and GOP/s-per-watt for the full system and for the core alone.
pub fn power_report(
    table: &ComponentTable,
    p: &TimingParams,
    timing: &TimingReport,
    plan: &WinogradPlan,
    convention: OpConvention,
) -> Result<PowerReport> {
    for key in table.keys() {
        if !Component::ALL.iter().any(|c| c.key() == key) {
            return Err(Error::Config(format!("unknown power component {key:?}")));
        }
    }
    let layers = timing.layers.len() as f64;
    let mut components = Vec::with_capacity(Component::ALL.len());
    for c in Component::ALL {
        let e = table
            .get(c.key())
            .ok_or_else(|| Error::Config(format!("power table is missing component {:?}", c.key())))?;
        if !(e.power_w.is_finite() && e.power_w >= 0.0)
            || !(e.energy_per_layer_j.is_finite() && e.energy_per_layer_j >= 0.0)
        {
            return Err(Error::Config(format!(
                "power.{}: power and energy must be finite and >= 0",
                c.key()
            )));
        }
        let amortized = if e.energy_per_layer_j > 0.0 {
            e.energy_per_layer_j * layers / timing.total_time_s
        } else {
            0.0
        };
        components.push(ComponentLine {
            component: c,
            power_w: e.power_w + amortized,
            note: e.note.clone(),
        });
    }
    let total_full_w = components.iter().map(|l| l.power_w).sum();
    let total_core_w = components
        .iter()
        .filter(|l| l.component.in_core())
        .map(|l| l.power_w)
        .sum();
    let gops = throughput_gops(plan, p.clock_hz, convention) * p.parallel_paths as f64;
    Ok(PowerReport {
        convention,
        components,
        total_full_w,
        total_core_w,
        throughput_gops: gops,
        efficiency_full: efficiency(gops, total_full_w),
        efficiency_core: efficiency(gops, total_core_w),
    })
}

/// Externally measured accelerator to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub name: String,
    pub speed_gops: f64,
    pub power_w: f64,
    /// Where the numbers come from. Required.
    pub source_note: String,
}

impl Baseline {
    pub fn validate(&self) -> Result<()> {
        if self.source_note.trim().is_empty() {
            return Err(Error::Config(format!(
                "baseline {:?} has no source_note",
                self.name
            )));
        }
        if !(self.speed_gops > 0.0 && self.power_w > 0.0) {
            return Err(Error::Config(format!(
                "baseline {:?}: speed_gops and power_w must be > 0",
                self.name
            )));
        }
        Ok(())
    }

    pub fn efficiency(&self) -> f64 {
        self.speed_gops / self.power_w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Baseline,
    /// Ours divided by theirs.
    pub speed_ratio: f64,
    pub efficiency_ratio_full: f64,
    pub efficiency_ratio_core: f64,
}

pub fn compare(report: &PowerReport, baselines: &[Baseline]) -> Result<Vec<Comparison>> {
    baselines
        .iter()
        .map(|b| {
            b.validate()?;
            Ok(Comparison {
                baseline: b.clone(),
                speed_ratio: report.throughput_gops / b.speed_gops,
                efficiency_ratio_full: report.efficiency_full / b.efficiency(),
                efficiency_ratio_core: report.efficiency_core / b.efficiency(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::{network_time, LayerSpec};
    use crate::winograd::make_plan;

    fn zero_table() -> ComponentTable {
        Component::ALL
            .iter()
            .map(|c| (c.key().to_string(), ComponentEntry::watts(0.0, "zero")))
            .collect()
    }

    fn setup() -> (TimingParams, TimingReport, WinogradPlan) {
        let p = TimingParams::default();
        let t = network_time(&[LayerSpec::new("a", 34, 34, 8, 8)], &p).unwrap();
        (p, t, make_plan(4, 3).unwrap())
    }

    #[test]
    fn laser_only() {
        let (p, t, plan) = setup();
        let mut table = zero_table();
        table.insert("laser".into(), ComponentEntry::watts(10e-3, "test"));
        let r = power_report(&table, &p, &t, &plan, OpConvention::Paper).unwrap();
        assert_eq!(r.total_full_w, 10e-3);
        assert_eq!(r.total_core_w, 10e-3);
        assert_eq!(r.efficiency_full, r.efficiency_core);
        assert_eq!(r.throughput_gops, 4500.0);
    }

    #[test]
    fn core_excludes_electronics() {
        let (p, t, plan) = setup();
        let mut table = zero_table();
        table.insert("laser".into(), ComponentEntry::watts(1.0, "x"));
        table.insert("adc_array".into(), ComponentEntry::watts(2.0, "x"));
        table.insert("memory_io".into(), ComponentEntry::watts(3.0, "x"));
        let r = power_report(&table, &p, &t, &plan, OpConvention::Paper).unwrap();
        assert_eq!(r.total_full_w, 6.0);
        assert_eq!(r.total_core_w, 1.0);
        assert!(r.efficiency_core > r.efficiency_full);
    }

    #[test]
    fn dsp_energy_is_amortized() {
        let (p, t, plan) = setup();
        let mut table = zero_table();
        table.insert(
            "filter_transform_dsp".into(),
            ComponentEntry {
                power_w: 0.0,
                energy_per_layer_j: 1e-9,
                note: "x".into(),
            },
        );
        let r = power_report(&table, &p, &t, &plan, OpConvention::Paper).unwrap();
        assert!((r.total_full_w - 1e-9 / t.total_time_s).abs() < 1e-15);
        assert_eq!(r.total_core_w, 0.0);
    }

    #[test]
    fn missing_component_is_named() {
        let (p, t, plan) = setup();
        let mut table = zero_table();
        table.remove("mrr_tuning");
        let err = power_report(&table, &p, &t, &plan, OpConvention::Paper).unwrap_err();
        assert!(err.to_string().contains("mrr_tuning"), "{err}");
        let mut table = zero_table();
        table.insert("fan".into(), ComponentEntry::watts(1.0, "x"));
        assert!(power_report(&table, &p, &t, &plan, OpConvention::Paper).is_err());
    }

    #[test]
    fn photodiode_estimate() {
        let dev = DeviceParams {
            insertion_loss_db: 0.0,
            ..DeviceParams::default()
        };
        let p = TimingParams {
            parallel_paths: 1,
            ..TimingParams::default()
        };
        let plan = make_plan(4, 3).unwrap();
        let t = estimate_components(&dev, &p, &plan);
        // 36 detectors at 1 mW optical, 1.2 mW each
        assert!((t["photodiodes"].power_w - 36.0 * 1.2e-3).abs() < 1e-12);
        assert_eq!(t.len(), Component::ALL.len());
    }

    #[test]
    fn baseline_needs_source() {
        let (p, t, plan) = setup();
        let r = power_report(&estimate_components(&DeviceParams::default(), &p, &plan), &p, &t, &plan, OpConvention::Paper)
            .unwrap();
        let mut b = Baseline {
            name: "gpu".into(),
            speed_gops: 100.0,
            power_w: 10.0,
            source_note: " ".into(),
        };
        assert!(compare(&r, std::slice::from_ref(&b)).is_err());
        b.source_note = "datasheet".into();
        let c = compare(&r, &[b]).unwrap();
        assert!((c[0].speed_ratio - r.throughput_gops / 100.0).abs() < 1e-12);
        assert!((c[0].efficiency_ratio_full - r.efficiency_full / 10.0).abs() < 1e-12);
    }
}
