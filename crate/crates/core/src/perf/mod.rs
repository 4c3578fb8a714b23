//! Analytical timing, throughput and power models.

mod power;
mod timing;

pub use power::{
    compare, estimate_components, power_report, Baseline, Comparison, Component, ComponentEntry,
    ComponentLine, ComponentTable, PowerReport, ADC_POWER_W, DAC_POWER_W, DSP_ENERGY_PER_LAYER_J,
    MEMORY_ENERGY_J_PER_BIT, RING_TUNING_POWER_W,
};
pub use timing::{
    layer_time, load_time_from_dacs, max_clock, network_time, t_compute, t_io, throughput_gops,
    throughput_table, tile_filter_time, LayerSpec, LayerTiming, OpConvention, ThroughputRow,
    TimingParams, TimingReport,
};
