use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::winograd::{make_plan, WinogradPlan};

/// Pipeline stage latencies and parallelism.
///
/// Defaults: 5 GHz clock, 200 ps line-buffer load/offload (memory access
/// time), the 200 ps compute budget split evenly over the four photonic
/// stages, 16 input DACs, 100 parallel paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingParams {
    pub clock_hz: f64,
    pub t_load_s: f64,
    pub t_offload_s: f64,
    pub t_laser_s: f64,
    pub t_winograd_s: f64,
    pub t_ewmm_s: f64,
    pub t_iwinograd_s: f64,
    pub dac_count: usize,
    pub dac_sample_rate_hz: f64,
    pub parallel_paths: usize,
    pub mem_bandwidth_bps: f64,
    pub mem_access_s: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            clock_hz: 5e9,
            t_load_s: 200e-12,
            t_offload_s: 200e-12,
            t_laser_s: 50e-12,
            t_winograd_s: 50e-12,
            t_ewmm_s: 50e-12,
            t_iwinograd_s: 50e-12,
            dac_count: 16,
            dac_sample_rate_hz: 18e9,
            parallel_paths: 100,
            mem_bandwidth_bps: 512e9,
            mem_access_s: 200e-12,
        }
    }
}

impl TimingParams {
    /// Field checks plus `clock_hz <= max_clock`.
    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        if !self.clock_within_limit() {
            return Err(Error::Config(format!(
                "timing.clock_hz = {} exceeds the slowest-stage limit of {} Hz",
                self.clock_hz,
                max_clock(self)
            )));
        }
        Ok(())
    }

    pub fn clock_within_limit(&self) -> bool {
        self.clock_hz <= max_clock(self) * (1.0 + 1e-12)
    }

    /// Sign and range checks only.
    pub fn validate_fields(&self) -> Result<()> {
        let positive = [
            ("clock_hz", self.clock_hz),
            ("t_load_s", self.t_load_s),
            ("t_offload_s", self.t_offload_s),
            ("dac_sample_rate_hz", self.dac_sample_rate_hz),
            ("mem_bandwidth_bps", self.mem_bandwidth_bps),
            ("mem_access_s", self.mem_access_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("timing.{name} must be > 0, got {v}")));
            }
        }
        let stages = [
            ("t_laser_s", self.t_laser_s),
            ("t_winograd_s", self.t_winograd_s),
            ("t_ewmm_s", self.t_ewmm_s),
            ("t_iwinograd_s", self.t_iwinograd_s),
        ];
        for (name, v) in stages {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("timing.{name} must be >= 0, got {v}")));
            }
        }
        if self.dac_count == 0 || self.parallel_paths == 0 {
            return Err(Error::Config(
                "timing.dac_count and timing.parallel_paths must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// `max(T_load, T_offload)`.
pub fn t_io(p: &TimingParams) -> f64 {
    p.t_load_s.max(p.t_offload_s)
}

/// Sum of the four photonic stage latencies.
pub fn t_compute(p: &TimingParams) -> f64 {
    p.t_laser_s + p.t_winograd_s + p.t_ewmm_s + p.t_iwinograd_s
}

/// Highest clock the pipeline sustains: one over its slowest stage.
pub fn max_clock(p: &TimingParams) -> f64 {
    1.0 / t_io(p).max(t_compute(p))
}

/// Time to push one tile through one filter at `clock_hz`.
pub fn tile_filter_time(clock_hz: f64) -> Result<f64> {
    if !(clock_hz > 0.0) {
        return Err(Error::domain(format!("clock must be > 0, got {clock_hz}")));
    }
    Ok(1.0 / clock_hz)
}

/// Load time of `elements` values through `dacs` converters at `rate_hz`.
pub fn load_time_from_dacs(elements: usize, dacs: usize, rate_hz: f64) -> f64 {
    elements.div_ceil(dacs) as f64 / rate_hz
}

/// How operations are counted per tile-filter cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpConvention {
    /// One operation per filter tap (`r^2`), i.e. 9 for 3x3 filters.
    Paper,
    /// One operation per output element (`m^2`).
    Outputs,
    /// Multiply and add counted separately for the direct equivalent (`2 m^2 r^2`).
    Macs,
}

impl OpConvention {
    pub const ALL: [OpConvention; 3] = [OpConvention::Paper, OpConvention::Outputs, OpConvention::Macs];

    pub fn ops_per_cycle(self, plan: &WinogradPlan) -> usize {
        let (m, r) = (plan.m(), plan.r());
        match self {
            OpConvention::Paper => r * r,
            OpConvention::Outputs => m * m,
            OpConvention::Macs => 2 * m * m * r * r,
        }
    }
}

impl fmt::Display for OpConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpConvention::Paper => "paper",
            OpConvention::Outputs => "outputs",
            OpConvention::Macs => "macs",
        })
    }
}

impl FromStr for OpConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(OpConvention::Paper),
            "outputs" => Ok(OpConvention::Outputs),
            "macs" => Ok(OpConvention::Macs),
            other => Err(Error::Config(format!(
                "unknown op convention {other:?} (expected paper, outputs or macs)"
            ))),
        }
    }
}

/// Per-path throughput in GOP/s.
pub fn throughput_gops(plan: &WinogradPlan, clock_hz: f64, convention: OpConvention) -> f64 {
    convention.ops_per_cycle(plan) as f64 * clock_hz / 1e9
}

fn default_r() -> usize {
    3
}

fn default_m() -> usize {
    4
}

/// Geometry of one convolution layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub filters: usize,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Output keeps the input extent (zero border of `(r-1)/2`).
    #[serde(default)]
    pub same_padding: bool,
}

impl LayerSpec {
    pub fn new(name: &str, height: usize, width: usize, channels: usize, filters: usize) -> Self {
        LayerSpec {
            name: name.to_string(),
            height,
            width,
            channels,
            filters,
            r: 3,
            m: 4,
            same_padding: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.filters == 0 || self.m == 0 || self.r == 0 {
            return Err(Error::Config(format!(
                "layer {:?}: channels, filters, m and r must be positive",
                self.name
            )));
        }
        if self.height < self.r || self.width < self.r {
            return Err(Error::Config(format!(
                "layer {:?}: {}x{} input is smaller than the {}x{} filter",
                self.name, self.height, self.width, self.r, self.r
            )));
        }
        Ok(())
    }

    pub fn output_extent(&self) -> (usize, usize) {
        if self.same_padding {
            (self.height, self.width)
        } else {
            (self.height - self.r + 1, self.width - self.r + 1)
        }
    }

    pub fn tiles(&self) -> usize {
        let (oh, ow) = self.output_extent();
        oh.div_ceil(self.m) * ow.div_ceil(self.m)
    }

    /// Filter weights held by this layer.
    pub fn weight_count(&self) -> usize {
        self.filters * self.channels * self.r * self.r
    }

    pub fn plan(&self) -> Result<WinogradPlan> {
        make_plan(self.m, self.r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTiming {
    pub name: String,
    pub tiles: usize,
    /// `tiles * channels * filters`, one pipeline slot each.
    pub tile_filter_ops: usize,
    pub cycles: usize,
    pub time_s: f64,
}

/// Cycles and wall time of one layer spread over the parallel paths.
pub fn layer_time(layer: &LayerSpec, p: &TimingParams) -> Result<LayerTiming> {
    layer.validate()?;
    let tiles = layer.tiles();
    let ops = tiles * layer.channels * layer.filters;
    let cycles = ops.div_ceil(p.parallel_paths);
    Ok(LayerTiming {
        name: layer.name.clone(),
        tiles,
        tile_filter_ops: ops,
        cycles,
        time_s: cycles as f64 / p.clock_hz,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub convention: OpConvention,
    pub m: usize,
    pub r: usize,
    pub ops_per_cycle: usize,
    pub gops_per_path: f64,
    pub gops_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub clock_hz: f64,
    pub layers: Vec<LayerTiming>,
    pub total_cycles: usize,
    pub total_time_s: f64,
    pub throughput: Vec<ThroughputRow>,
}

/// Throughput under every convention for one plan.
pub fn throughput_table(plan: &WinogradPlan, p: &TimingParams) -> Vec<ThroughputRow> {
    OpConvention::ALL
        .iter()
        .map(|&convention| {
            let per_path = throughput_gops(plan, p.clock_hz, convention);
            ThroughputRow {
                convention,
                m: plan.m(),
                r: plan.r(),
                ops_per_cycle: convention.ops_per_cycle(plan),
                gops_per_path: per_path,
                gops_total: per_path * p.parallel_paths as f64,
            }
        })
        .collect()
}

/// Layers run strictly one after another.
pub fn network_time(layers: &[LayerSpec], p: &TimingParams) -> Result<TimingReport> {
    if layers.is_empty() {
        return Err(Error::domain("network has no layers"));
    }
    let rows = layers
        .iter()
        .map(|l| layer_time(l, p))
        .collect::<Result<Vec<_>>>()?;
    let total_cycles = rows.iter().map(|r| r.cycles).sum();
    let total_time_s = rows.iter().map(|r| r.time_s).sum();

    let mut plans: Vec<(usize, usize)> = Vec::new();
    for l in layers {
        if !plans.contains(&(l.m, l.r)) {
            plans.push((l.m, l.r));
        }
    }
    let mut throughput = Vec::new();
    for (m, r) in plans {
        throughput.extend(throughput_table(&make_plan(m, r)?, p));
    }
    Ok(TimingReport {
        clock_hz: p.clock_hz,
        layers: rows,
        total_cycles,
        total_time_s,
        throughput,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn io_time() {
        let p = TimingParams {
            t_load_s: 200e-12,
            t_offload_s: 150e-12,
            ..TimingParams::default()
        };
        assert_eq!(t_io(&p), 200e-12);
        let p = TimingParams {
            t_load_s: 1e-10,
            t_offload_s: 1e-10,
            ..TimingParams::default()
        };
        assert_eq!(t_io(&p), 1e-10);
    }

    #[test]
    fn dac_load_fits_the_clock() {
        // ceil(36/16) = 3 samples at 18 GS/s
        let t = load_time_from_dacs(36, 16, 18e9);
        assert!((t - 166.67e-12).abs() < 0.01e-12);
        assert!(t < 200e-12);
    }

    #[test]
    fn compute_time() {
        let zero = TimingParams {
            t_laser_s: 0.0,
            t_winograd_s: 0.0,
            t_ewmm_s: 0.0,
            t_iwinograd_s: 0.0,
            ..TimingParams::default()
        };
        assert_eq!(t_compute(&zero), 0.0);
        let p = TimingParams::default();
        assert!((t_compute(&p) - 200e-12).abs() < 1e-24);
    }

    #[test]
    fn clock_limit() {
        let p = TimingParams::default();
        assert!((max_clock(&p) - 5e9).abs() < 1.0);
        let slow = TimingParams {
            t_offload_s: 400e-12,
            ..TimingParams::default()
        };
        assert!((max_clock(&slow) - 2.5e9).abs() < 1.0);
        let half = TimingParams {
            t_load_s: 100e-12,
            t_offload_s: 100e-12,
            t_laser_s: 25e-12,
            t_winograd_s: 25e-12,
            t_ewmm_s: 25e-12,
            t_iwinograd_s: 25e-12,
            ..TimingParams::default()
        };
        assert!((max_clock(&half) / max_clock(&p) - 2.0).abs() < 1e-12);
        assert!(slow.validate().is_err());
        p.validate().unwrap();
    }

    #[test]
    fn tile_time() {
        assert_eq!(tile_filter_time(5e9).unwrap(), 200e-12);
        assert_eq!(tile_filter_time(1e9).unwrap(), 1e-9);
        assert_eq!(tile_filter_time(10e9).unwrap(), 100e-12);
        assert!(tile_filter_time(0.0).is_err());
    }

    #[test]
    fn throughput_conventions() {
        let plan = make_plan(4, 3).unwrap();
        assert_eq!(throughput_gops(&plan, 5e9, OpConvention::Paper), 45.0);
        assert_eq!(throughput_gops(&plan, 5e9, OpConvention::Outputs), 80.0);
        assert_eq!(throughput_gops(&plan, 5e9, OpConvention::Macs), 1440.0);
        assert_eq!("macs".parse::<OpConvention>().unwrap(), OpConvention::Macs);
        assert!("flops".parse::<OpConvention>().is_err());
    }

    #[test]
    fn single_tile_layer() {
        let p = TimingParams {
            parallel_paths: 1,
            ..TimingParams::default()
        };
        let t = layer_time(&LayerSpec::new("t", 6, 6, 1, 1), &p).unwrap();
        assert_eq!((t.tiles, t.cycles), (1, 1));
        assert_eq!(t.time_s, 200e-12);
    }

    #[test]
    fn vgg_first_layer() {
        let mut l = LayerSpec::new("conv1_1", 224, 224, 3, 64);
        l.same_padding = true;
        let t = layer_time(&l, &TimingParams::default()).unwrap();
        assert_eq!(t.tiles, 3136);
        assert_eq!(t.cycles, 6022);
        assert!((t.time_s - 1.2044e-6).abs() < 1e-12);
    }

    #[test]
    fn doubling_paths_halves_cycles() {
        let l = LayerSpec::new("x", 34, 34, 16, 32);
        let p1 = TimingParams {
            parallel_paths: 50,
            ..TimingParams::default()
        };
        let p2 = TimingParams {
            parallel_paths: 100,
            ..TimingParams::default()
        };
        let c1 = layer_time(&l, &p1).unwrap().cycles;
        let c2 = layer_time(&l, &p2).unwrap().cycles;
        assert!(c1.abs_diff(2 * c2) <= 1);
    }

    #[test]
    fn network_is_sequential() {
        let p = TimingParams::default();
        let l = LayerSpec::new("a", 30, 30, 8, 8);
        let one = network_time(std::slice::from_ref(&l), &p).unwrap();
        assert_eq!(one.total_time_s, layer_time(&l, &p).unwrap().time_s);
        let two = network_time(&[l.clone(), l], &p).unwrap();
        assert_eq!(two.total_time_s, 2.0 * one.total_time_s);
        assert_eq!(two.total_cycles, 2 * one.total_cycles);
        assert!(network_time(&[], &p).is_err());
    }

    #[test]
    fn layer_validation() {
        assert!(LayerSpec::new("tiny", 2, 8, 1, 1).validate().is_err());
        assert!(LayerSpec::new("none", 8, 8, 0, 1).validate().is_err());
    }
}
