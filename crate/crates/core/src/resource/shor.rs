use serde::{Deserialize, Serialize};

use super::{Optimizer, ResourceParams};
use crate::codes::Species;
use crate::error::Result;

/// Modular exponentiation for an `bits`-bit modulus with `40 N^3`
/// sequential Toffoli gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShorTask {
    pub bits: u32,
}

impl ShorTask {
    pub fn toffoli_count(&self) -> f64 {
        40.0 * (self.bits as f64).powi(3)
    }

    pub fn log10_count(&self) -> f64 {
        self.toffoli_count().log10()
    }

    /// Fastest runtime: one Toffoli per measurement and feed-forward.
    pub fn runtime_seconds(&self, params: &ResourceParams) -> f64 {
        self.toffoli_count() * params.t_meas_ff
    }
}

/// Human-readable duration with two significant figures, in hours, days,
/// weeks or years.
pub fn format_duration(seconds: f64) -> String {
    const HOUR: f64 = 3600.0;
    const DAY: f64 = 24.0 * HOUR;
    const WEEK: f64 = 7.0 * DAY;
    const YEAR: f64 = 365.25 * DAY;
    let (v, unit) = if seconds < 2.0 * DAY {
        (seconds / HOUR, "hours")
    } else if seconds < 2.0 * WEEK {
        (seconds / DAY, "days")
    } else if seconds < 2.0 * YEAR {
        (seconds / WEEK, "weeks")
    } else {
        (seconds / YEAR, "years")
    };
    let v = crate::math::round_sig(v, 2);
    if v >= 10.0 {
        format!("{v:.0} {unit}")
    } else {
        format!("{v:.1} {unit}")
    }
}

/// One row of the Shor resource table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShorRow {
    pub bits: u32,
    pub log10_count: f64,
    /// Qubit-rounds per Toffoli at each gate error, in the order given.
    pub volume: Vec<f64>,
    /// Physical data qubits of the time-optimal factory at each gate error.
    pub factory_qubits: Vec<f64>,
    pub factory_designs: Vec<String>,
    pub volume_designs: Vec<String>,
    /// Runtime in seconds at each cycle time, in the order given.
    pub runtime: Vec<f64>,
}

impl ShorRow {
    /// Rows for each task, using one optimizer per gate error.
    pub fn compute(tasks: &[ShorTask], optimizers: &[Optimizer], cycle_times: &[f64]) -> Result<Vec<Self>> {
        tasks
            .iter()
            .map(|task| {
                let n = task.toffoli_count();
                let mut row = ShorRow {
                    bits: task.bits,
                    log10_count: task.log10_count(),
                    volume: vec![],
                    factory_qubits: vec![],
                    factory_designs: vec![],
                    volume_designs: vec![],
                    runtime: vec![],
                };
                for opt in optimizers {
                    let best = opt.best(n, Species::Toffoli, None)?;
                    row.volume.push(best.volume());
                    row.volume_designs.push(describe(&best));
                    let fast = opt.time_optimal(n, Species::Toffoli)?;
                    row.factory_qubits.push(fast.physical_qubits);
                    row.factory_designs.push(format!("{} x{}", describe(&fast.candidate), fast.copies));
                }
                for &t_sc in cycle_times {
                    let p = ResourceParams::new(1e-3, t_sc);
                    row.runtime.push(task.runtime_seconds(&p));
                }
                Ok(row)
            })
            .collect()
    }
}

fn describe(c: &super::Candidate) -> String {
    let d: Vec<String> = c.layout.distances().iter().map(|d| d.to_string()).collect();
    format!("{} d={}{}", c.layout.design, d.join(","), if c.seven_t { " (7T)" } else { "" })
}
