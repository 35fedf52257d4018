//! Plot-ready CSVs with the log columns precomputed.

use std::path::Path;

use qcontrol_core::gate::RobustnessPoint;
use qcontrol_core::scaling::LedgerRecord;

use crate::error::{HarnessError, Result};
use crate::formats::{self, LEDGER_HEADER, ROBUSTNESS_HEADER};

pub const SCALING_PLOT_HEADER: [&str; 4] = ["N", "V_H", "log10_N", "log10_V_H"];
pub const ROBUSTNESS_PLOT_HEADER: [&str; 3] = ["delta_eps", "F", "stderr"];

/// Accepted ledger points as `(N, V_H, log10 N, log10 V_H)` rows.
pub fn scaling_rows(records: &[LedgerRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .filter(|r| r.accepted)
        .map(|r| {
            let n = r.n as f64;
            vec![r.n.to_string(), r.v_h.to_string(), n.log10().to_string(), r.v_h.log10().to_string()]
        })
        .collect()
}

/// Robustness points in grid order.
pub fn robustness_rows(points: &[RobustnessPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| vec![p.delta_eps.to_string(), p.mean_fidelity.to_string(), p.std_error.to_string()])
        .collect()
}

pub fn write_scaling_plot(path: &Path, records: &[LedgerRecord]) -> Result<()> {
    formats::write_table(path, &SCALING_PLOT_HEADER, &scaling_rows(records))
}

pub fn write_robustness_plot(path: &Path, points: &[RobustnessPoint]) -> Result<()> {
    formats::write_table(path, &ROBUSTNESS_PLOT_HEADER, &robustness_rows(points))
}

/// Converts a ledger or robustness CSV, recognized by its header line.
pub fn emit_plotdata(artifact: &Path, output: &Path) -> Result<()> {
    let text = std::fs::read_to_string(artifact).map_err(|e| HarnessError::io(artifact, e))?;
    let header = text.lines().next().unwrap_or("");
    if header == LEDGER_HEADER.join(",") {
        write_scaling_plot(output, &formats::read_ledger(artifact)?)
    } else if header == ROBUSTNESS_HEADER.join(",") {
        write_robustness_plot(output, &formats::read_robustness(artifact)?)
    } else {
        Err(HarnessError::artifact(artifact, "not a ledger or robustness CSV"))
    }
}

/// Default output path: `<stem>.plot.csv` next to the artifact.
pub fn default_output(artifact: &Path) -> std::path::PathBuf {
    let stem = artifact.file_stem().and_then(|s| s.to_str()).unwrap_or("artifact");
    artifact.with_file_name(format!("{stem}.plot.csv"))
}
