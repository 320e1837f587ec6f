//! CSV emission. Real values carry 12 significant digits.

use std::path::Path;

use smi_core::{IterationRecord, Termination};

use crate::config::Units;
use crate::error::CliError;

/// All estimates at one sweep point, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub smi_asymptotic: f64,
    pub smi_upper: f64,
    pub smi_lower: f64,
    pub smi_mc_mean: f64,
    pub smi_mc_stderr: f64,
    pub dof_lower: usize,
    pub dof_upper: usize,
    pub wall_time_ms: Option<f64>,
}

impl SweepRow {
    /// `lower ≤ asymptotic ≤ upper`, with slack for rounding.
    pub fn check_ordering(&self) -> Result<(), CliError> {
        let slack = 1e-9 * self.smi_upper.abs().max(1e-300);
        if self.smi_lower <= self.smi_asymptotic + slack
            && self.smi_asymptotic <= self.smi_upper + slack
        {
            Ok(())
        } else {
            Err(CliError::Ordering(format!(
                "at {}: lower {:e}, asymptotic {:e}, upper {:e}",
                self.sweep_value, self.smi_lower, self.smi_asymptotic, self.smi_upper
            )))
        }
    }

    fn fields(&self, units: Units) -> Vec<String> {
        let mut v = vec![
            num(self.sweep_value),
            num(units.convert(self.smi_asymptotic)),
            num(units.convert(self.smi_upper)),
            num(units.convert(self.smi_lower)),
            num(units.convert(self.smi_mc_mean)),
            num(units.convert(self.smi_mc_stderr)),
            self.dof_lower.to_string(),
            self.dof_upper.to_string(),
        ];
        if let Some(t) = self.wall_time_ms {
            v.push(num(t));
        }
        v
    }
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "smi_asymptotic",
    "smi_upper",
    "smi_lower",
    "smi_mc_mean",
    "smi_mc_stderr",
    "dof_lower",
    "dof_upper",
];

/// One precoding arm at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub arm: &'static str,
    pub row: SweepRow,
    pub iterations: usize,
    pub termination: Termination,
}

pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn sweep_header(sweep: &str, timing: bool) -> Vec<String> {
    let mut h = vec![sweep.to_string()];
    h.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
    if timing {
        h.push("wall_time_ms".into());
    }
    h
}

pub fn write_sweep(
    path: &Path,
    sweep: &str,
    rows: &[SweepRow],
    units: Units,
) -> Result<(), CliError> {
    let timing = rows.iter().any(|r| r.wall_time_ms.is_some());
    write_csv(
        path,
        sweep_header(sweep, timing),
        rows.iter().map(|r| r.fields(units)).collect(),
    )
}

pub fn write_fig3(path: &Path, rows: &[Fig3Row], units: Units) -> Result<(), CliError> {
    let timing = rows.iter().any(|r| r.row.wall_time_ms.is_some());
    let mut header = sweep_header("snr_db", timing);
    header.insert(1, "arm".into());
    header.extend(["iterations".into(), "termination".into()]);
    let body = rows
        .iter()
        .map(|r| {
            let mut f = r.row.fields(units);
            f.insert(1, r.arm.to_string());
            f.push(r.iterations.to_string());
            f.push(r.termination.as_str().to_string());
            f
        })
        .collect();
    write_csv(path, header, body)
}

pub fn write_trace(
    path: &Path,
    records: &[IterationRecord<f64>],
    units: Units,
) -> Result<(), CliError> {
    let header = ["iter", "objective", "grad_norm", "step", "backtracks"]
        .map(String::from)
        .to_vec();
    let body = records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                num(units.convert(r.objective)),
                num(r.grad_norm),
                num(r.step),
                r.backtracks.to_string(),
            ]
        })
        .collect();
    write_csv(path, header, body)
}
