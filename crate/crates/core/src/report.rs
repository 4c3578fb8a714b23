//! CSV tables emitted by the commands. Column orders are fixed; floats use the
//! shortest representation that round-trips, so reruns are byte-identical.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::SweepResult;
use crate::perf::{Comparison, PowerReport, TimingReport};
use crate::resources::ResourceReport;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($v.to_string()),*] };
}

/// `layer,tiles,tile_filter_ops,cycles,time_s`, closed by a `total` row.
pub fn timing_table(t: &TimingReport) -> Table {
    let mut table = Table::new(&["layer", "tiles", "tile_filter_ops", "cycles", "time_s"]);
    for l in &t.layers {
        table.push(row![l.name, l.tiles, l.tile_filter_ops, l.cycles, l.time_s]);
    }
    let tiles: usize = t.layers.iter().map(|l| l.tiles).sum();
    let ops: usize = t.layers.iter().map(|l| l.tile_filter_ops).sum();
    table.push(row!["total", tiles, ops, t.total_cycles, t.total_time_s]);
    table
}

/// `convention,m,r,ops_per_cycle,clock_hz,tile_filter_time_s,gops_per_path,gops_total`.
pub fn throughput_table(t: &TimingReport) -> Table {
    let mut table = Table::new(&[
        "convention",
        "m",
        "r",
        "ops_per_cycle",
        "clock_hz",
        "tile_filter_time_s",
        "gops_per_path",
        "gops_total",
    ]);
    for r in &t.throughput {
        table.push(row![
            r.convention,
            r.m,
            r.r,
            r.ops_per_cycle,
            t.clock_hz,
            1.0 / t.clock_hz,
            r.gops_per_path,
            r.gops_total
        ]);
    }
    table
}

/// `component,in_core,power_w,note`.
pub fn power_components_table(p: &PowerReport) -> Table {
    let mut table = Table::new(&["component", "in_core", "power_w", "note"]);
    for c in &p.components {
        table.push(row![c.component.key(), c.component.in_core(), c.power_w, c.note]);
    }
    table
}

/// `mode,convention,total_w,throughput_gops,efficiency_gops_per_w`.
pub fn power_summary_table(p: &PowerReport) -> Table {
    let mut table = Table::new(&["mode", "convention", "total_w", "throughput_gops", "efficiency_gops_per_w"]);
    table.push(row!["full", p.convention, p.total_full_w, p.throughput_gops, p.efficiency_full]);
    table.push(row!["core", p.convention, p.total_core_w, p.throughput_gops, p.efficiency_core]);
    table
}

/// `name,speed_gops,power_w,efficiency_gops_per_w,source_note,speed_ratio,efficiency_ratio_full,efficiency_ratio_core`.
pub fn comparison_table(rows: &[Comparison]) -> Table {
    let mut table = Table::new(&[
        "name",
        "speed_gops",
        "power_w",
        "efficiency_gops_per_w",
        "source_note",
        "speed_ratio",
        "efficiency_ratio_full",
        "efficiency_ratio_core",
    ]);
    for c in rows {
        let b = &c.baseline;
        table.push(row![
            b.name,
            b.speed_gops,
            b.power_w,
            b.efficiency(),
            b.source_note,
            c.speed_ratio,
            c.efficiency_ratio_full,
            c.efficiency_ratio_core
        ]);
    }
    table
}

/// `train_noise,infer_noise,repeat,accuracy`.
pub fn sweep_table(s: &SweepResult) -> Table {
    let mut table = Table::new(&["train_noise", "infer_noise", "repeat", "accuracy"]);
    for c in &s.cells {
        for (r, a) in c.eval.accuracies.iter().enumerate() {
            table.push(row![c.train_noise, c.infer_noise, r, a]);
        }
    }
    table
}

/// `train_noise,infer_noise,repeats,mean_accuracy,std_accuracy`.
pub fn sweep_summary_table(s: &SweepResult) -> Table {
    let mut table = Table::new(&["train_noise", "infer_noise", "repeats", "mean_accuracy", "std_accuracy"]);
    for c in &s.cells {
        table.push(row![c.train_noise, c.infer_noise, c.eval.accuracies.len(), c.eval.mean, c.eval.std]);
    }
    table
}

/// `train_noise,epoch,train_loss,clean_test_accuracy` (accuracy on the last epoch row only).
pub fn training_table(s: &SweepResult) -> Table {
    let mut table = Table::new(&["train_noise", "epoch", "train_loss", "clean_test_accuracy"]);
    for t in &s.trained {
        for (i, e) in t.curve.iter().enumerate() {
            let acc = if i + 1 == t.curve.len() {
                t.clean_accuracy.to_string()
            } else {
                String::new()
            };
            table.push(row![t.train_noise, e.epoch, e.train_loss, acc]);
        }
    }
    table
}

/// `part,index`: dataset rows in the train and test parts.
pub fn split_table(s: &SweepResult) -> Table {
    let mut table = Table::new(&["part", "index"]);
    for &i in &s.train_indices {
        table.push(row!["train", i]);
    }
    for &i in &s.test_indices {
        table.push(row!["test", i]);
    }
    table
}

/// Per-layer resources and verdicts.
pub fn resources_table(r: &ResourceReport) -> Table {
    let mut table = Table::new(&[
        "layer",
        "wavelengths",
        "channel_batching",
        "mrr_ewmm",
        "mrr_input_transform_lower_bound",
        "photodiodes",
        "connections",
        "memristor_cells",
        "memristor_area_cm2",
        "feasible",
        "violations",
    ]);
    for l in &r.layers {
        let violations: Vec<String> = l.violations.iter().map(ToString::to_string).collect();
        table.push(row![
            l.name,
            l.wavelengths,
            l.channel_batching,
            l.mrr_ewmm,
            l.mrr_input_transform_lower_bound,
            l.photodiodes,
            l.connections,
            l.memristor_cells,
            l.memristor_area_cm2,
            l.feasible(),
            violations.join("; ")
        ]);
    }
    table
}
