//! Artifact formats. Everything numeric is CSV; floats use Rust's shortest
//! round-trip representation so rereading a file reproduces the values exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use qcontrol_core::gate::{PulseSequence, RobustnessPoint};
use qcontrol_core::optimizer::IterationRecord;
use qcontrol_core::scaling::{LedgerRecord, LedgerSink};

use crate::error::{HarnessError, Result};

pub const LEDGER_HEADER: [&str; 7] = ["N", "V_H", "log_residual", "delta_y", "accepted", "seed", "wall_seconds"];
pub const ROBUSTNESS_HEADER: [&str; 3] = ["delta_eps", "mean_fidelity", "std_error"];
pub const CONVERGENCE_HEADER: [&str; 6] =
    ["iteration", "evaluations", "best_fitness", "mutation_rate", "crossover_rate", "full_space"];
pub const PULSE_PREAMBLE: [&str; 3] = ["n_lines", "T", "dt"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_f64(path: &Path, field: &str, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| HarnessError::artifact(path, format!("bad {what} value `{field}`")))
}

fn parse_opt(path: &Path, field: &str, what: &str) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(path, field, what).map(Some)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| HarnessError::csv(path, e))
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| HarnessError::csv(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(HarnessError::artifact(path, format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

fn ledger_row(r: &LedgerRecord) -> [String; 7] {
    [
        r.n.to_string(),
        r.v_h.to_string(),
        opt(r.log_residual),
        opt(r.delta_y),
        r.accepted.to_string(),
        r.seed.to_string(),
        opt(r.wall_seconds),
    ]
}

/// Ledger sink that appends and flushes one row per decision, so an aborted
/// campaign leaves every decided row on disk.
pub struct CsvLedger {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvLedger {
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv_writer(path)?;
        writer.write_record(LEDGER_HEADER).map_err(|e| HarnessError::csv(path, e))?;
        writer.flush().map_err(|e| HarnessError::io(path, e))?;
        Ok(CsvLedger { path: path.into(), writer })
    }

    fn append(&mut self, r: &LedgerRecord) -> Result<()> {
        self.writer.write_record(ledger_row(r)).map_err(|e| HarnessError::csv(&self.path, e))?;
        self.writer.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

impl LedgerSink for CsvLedger {
    fn record(&mut self, record: &LedgerRecord) -> qcontrol_core::Result<()> {
        self.append(record).map_err(|e| qcontrol_core::Error::Config(e.to_string()))
    }
}

pub fn write_ledger(path: &Path, records: &[LedgerRecord]) -> Result<()> {
    let mut ledger = CsvLedger::create(path)?;
    records.iter().try_for_each(|r| ledger.append(r))
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRecord>> {
    let mut reader = csv_reader(path)?;
    check_header(path, &mut reader, &LEDGER_HEADER)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| HarnessError::csv(path, e))?;
        let n = row[0].parse().map_err(|_| HarnessError::artifact(path, format!("bad N `{}`", &row[0])))?;
        let accepted = row[4].parse().map_err(|_| HarnessError::artifact(path, format!("bad flag `{}`", &row[4])))?;
        let seed = row[5].parse().map_err(|_| HarnessError::artifact(path, format!("bad seed `{}`", &row[5])))?;
        out.push(LedgerRecord {
            n,
            v_h: parse_f64(path, &row[1], "V_H")?,
            log_residual: parse_opt(path, &row[2], "log_residual")?,
            delta_y: parse_opt(path, &row[3], "delta_y")?,
            accepted,
            seed,
            wall_seconds: parse_opt(path, &row[6], "wall_seconds")?,
        });
    }
    Ok(out)
}

pub fn write_robustness(path: &Path, points: &[RobustnessPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ROBUSTNESS_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for p in points {
        w.write_record([p.delta_eps.to_string(), p.mean_fidelity.to_string(), p.std_error.to_string()])
            .map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_robustness(path: &Path) -> Result<Vec<RobustnessPoint>> {
    let mut reader = csv_reader(path)?;
    check_header(path, &mut reader, &ROBUSTNESS_HEADER)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| HarnessError::csv(path, e))?;
        out.push(RobustnessPoint {
            delta_eps: parse_f64(path, &row[0], "delta_eps")?,
            mean_fidelity: parse_f64(path, &row[1], "mean_fidelity")?,
            std_error: parse_f64(path, &row[2], "std_error")?,
        });
    }
    Ok(out)
}

pub fn write_convergence(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(CONVERGENCE_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for r in history {
        w.write_record([
            r.iteration.to_string(),
            r.evaluations.to_string(),
            r.best_fitness.to_string(),
            r.mutation_rate.to_string(),
            r.crossover_rate.to_string(),
            r.full_space.to_string(),
        ])
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Pulse file: a `n_lines,T,dt` preamble row and its values, then one row per
/// time step with one column per control line.
pub fn write_pulses(path: &Path, pulses: &PulseSequence) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let err = |e| HarnessError::csv(path, e);
    w.write_record(PULSE_PREAMBLE).map_err(err)?;
    w.write_record([pulses.lines().to_string(), pulses.steps().to_string(), pulses.dt().to_string()]).map_err(err)?;
    w.write_record((0..pulses.lines()).map(|l| format!("eps_{l}"))).map_err(err)?;
    for t in 0..pulses.steps() {
        w.write_record((0..pulses.lines()).map(|l| pulses.amplitude(l, t).to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_pulses(path: &Path) -> Result<PulseSequence> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| HarnessError::csv(path, e))?;
    let rows: Vec<csv::StringRecord> =
        reader.records().collect::<std::result::Result<_, _>>().map_err(|e| HarnessError::csv(path, e))?;
    if rows.len() < 3 || rows[0].iter().ne(PULSE_PREAMBLE.iter().copied()) || rows[1].len() != 3 {
        return Err(HarnessError::artifact(path, "missing n_lines,T,dt preamble"));
    }
    let lines: usize = rows[1][0].parse().map_err(|_| HarnessError::artifact(path, "bad n_lines"))?;
    let steps: usize = rows[1][1].parse().map_err(|_| HarnessError::artifact(path, "bad T"))?;
    let dt = parse_f64(path, &rows[1][2], "dt")?;
    let body = &rows[3..];
    if body.len() != steps || body.iter().any(|r| r.len() != lines) {
        return Err(HarnessError::artifact(path, format!("expected {steps} rows of {lines} columns")));
    }
    let mut flat = vec![0.0; lines * steps];
    for (t, row) in body.iter().enumerate() {
        for (l, field) in row.iter().enumerate() {
            flat[l * steps + t] = parse_f64(path, field, "amplitude")?;
        }
    }
    Ok(PulseSequence::new(lines, steps, dt, flat)?)
}

/// Policy file: `#` comment lines with metadata, then one `Δ_m` per line.
pub fn write_policy(path: &Path, deltas: &[f64], metadata: &[(&str, String)]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = String::from("# feedback policy, one phase increment per photon (radians)\n");
    for (k, v) in metadata {
        body.push_str(&format!("# {k} = {v}\n"));
    }
    for d in deltas {
        body.push_str(&format!("{d}\n"));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

pub fn read_policy(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_f64(path, line, "policy")?);
    }
    Ok(out)
}

/// Writes `(header, rows)` as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
