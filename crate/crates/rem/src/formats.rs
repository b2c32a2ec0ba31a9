//! Text file formats: bit-flip models, expectation vectors, circuits and
//! per-experiment results.
//!
//! Floats are written in shortest round-trip form, so every file reads back
//! bit-exactly.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rem_core::experiment::ExperimentResult;
use rem_core::model::{BitFlipModel, QubitFlip};
use rem_core::sim::{Circuit, Gate};
use serde::{Deserialize, Serialize};

use crate::error::{RemError, Result};

/// Tolerance on a supplied identity expectation.
const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Serialize, Deserialize)]
struct ModelRow {
    qubit: usize,
    p0: f64,
    p1: f64,
    shots_used: Option<u64>,
    stderr0: Option<f64>,
    stderr1: Option<f64>,
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader)
}

fn invalid(message: impl Into<String>) -> csv::Error {
    csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, message.into()))
}

pub fn write_model_to<W: Write>(writer: W, model: &BitFlipModel) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (qubit, f) in model.flips().iter().enumerate() {
        w.serialize(ModelRow {
            qubit,
            p0: f.p0,
            p1: f.p1,
            shots_used: f.shots_used,
            stderr0: f.stderr0,
            stderr1: f.stderr1,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads per-qubit records in any row order. Every qubit from 0 up must
/// appear exactly once. The model is not validated.
pub fn read_model_from<R: Read>(reader: R) -> csv::Result<Vec<QubitFlip>> {
    let mut rows: Vec<ModelRow> = csv_reader(reader).deserialize().collect::<csv::Result<_>>()?;
    rows.sort_by_key(|r| r.qubit);
    for (i, row) in rows.iter().enumerate() {
        if row.qubit != i {
            return Err(invalid(format!("qubit {i} missing or duplicated")));
        }
    }
    Ok(rows
        .into_iter()
        .map(|r| QubitFlip { p0: r.p0, p1: r.p1, shots_used: r.shots_used, stderr0: r.stderr0, stderr1: r.stderr1 })
        .collect())
}

pub fn write_model(path: &Path, model: &BitFlipModel) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| RemError::io(path, e))?;
    write_model_to(file, model).map_err(|e| RemError::csv(path, e))
}

/// Reads and validates a model file.
pub fn read_model(path: &Path) -> Result<BitFlipModel> {
    let file = std::fs::File::open(path).map_err(|e| RemError::io(path, e))?;
    let flips = read_model_from(file).map_err(|e| RemError::csv(path, e))?;
    if flips.is_empty() {
        return Err(RemError::parse(path, "no qubit records"));
    }
    Ok(BitFlipModel::new(flips)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpectationRow {
    operator_mask: usize,
    expectation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unphysical: Option<bool>,
}

/// Writes one row per operator mask, from the identity up.
pub fn write_expectations_to<W: Write>(writer: W, values: &[f64], flag_unphysical: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (operator_mask, &expectation) in values.iter().enumerate() {
        w.serialize(ExpectationRow {
            operator_mask,
            expectation,
            unphysical: flag_unphysical.then_some(expectation.abs() > 1.0),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a full expectation vector for `qubits` qubits. Every non-identity
/// mask must appear once; the identity row is optional and must equal 1.
pub fn read_expectations_from<R: Read>(reader: R, qubits: usize) -> csv::Result<Vec<f64>> {
    let dim = 1usize << qubits;
    let mut values = vec![f64::NAN; dim];
    values[0] = 1.0;
    let mut seen = BTreeSet::new();
    for row in csv_reader(reader).deserialize() {
        let row: ExpectationRow = row?;
        if row.operator_mask >= dim {
            return Err(invalid(format!("operator mask {} out of range for {qubits} qubits", row.operator_mask)));
        }
        if !seen.insert(row.operator_mask) {
            return Err(invalid(format!("operator mask {} listed twice", row.operator_mask)));
        }
        if row.operator_mask == 0 && (row.expectation - 1.0).abs() > IDENTITY_TOLERANCE {
            return Err(invalid(format!("identity expectation {} is not 1", row.expectation)));
        }
        if row.operator_mask != 0 {
            values[row.operator_mask] = row.expectation;
        }
    }
    if let Some(missing) = (1..dim).find(|m| !seen.contains(m)) {
        return Err(invalid(format!("operator mask {missing} missing")));
    }
    Ok(values)
}

pub fn write_expectations(path: &Path, values: &[f64], flag_unphysical: bool) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| RemError::io(path, e))?;
    write_expectations_to(file, values, flag_unphysical).map_err(|e| RemError::csv(path, e))
}

pub fn read_expectations(path: &Path, qubits: usize) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| RemError::io(path, e))?;
    read_expectations_from(file, qubits).map_err(|e| RemError::csv(path, e))
}

/// One gate per line after a `qubits N` header:
///
/// ```text
/// qubits 2
/// rx 0 1.5707963267948966
/// rz 1 0.25
/// cnot 0 1
/// x 1
/// ```
pub fn format_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\n", circuit.qubits());
    for gate in circuit.gates() {
        let line = match *gate {
            Gate::Rx { qubit, theta } => format!("rx {qubit} {theta:?}"),
            Gate::Rz { qubit, theta } => format!("rz {qubit} {theta:?}"),
            Gate::Cnot { control, target } => format!("cnot {control} {target}"),
            Gate::X { qubit } => format!("x {qubit}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses [`format_circuit`] output. Blank lines and `#` comments are skipped.
pub fn parse_circuit(text: &str) -> std::result::Result<Circuit, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n, header) = lines.next().ok_or("empty circuit file")?;
    let qubits = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["qubits", q] => q.parse::<usize>().map_err(|e| format!("line {n}: {e}"))?,
        _ => return Err(format!("line {n}: expected `qubits N`")),
    };
    let mut circuit = Circuit::new(qubits).map_err(|e| e.to_string())?;
    for (n, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str| s.parse::<usize>().map_err(|e| format!("line {n}: {e}"));
        let angle = |s: &str| s.parse::<f64>().map_err(|e| format!("line {n}: {e}"));
        let gate = match fields.as_slice() {
            ["rx", q, t] => Gate::Rx { qubit: index(q)?, theta: angle(t)? },
            ["rz", q, t] => Gate::Rz { qubit: index(q)?, theta: angle(t)? },
            ["cnot", c, t] => Gate::Cnot { control: index(c)?, target: index(t)? },
            ["x", q] => Gate::X { qubit: index(q)? },
            _ => return Err(format!("line {n}: unrecognized gate `{line}`")),
        };
        circuit.push(gate).map_err(|e| format!("line {n}: {e}"))?;
    }
    Ok(circuit)
}

pub fn write_circuit(path: &Path, circuit: &Circuit) -> Result<()> {
    crate::error::write(path, format_circuit(circuit))
}

pub fn read_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&crate::error::read_to_string(path)?).map_err(|e| RemError::parse(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    shots: u64,
    experiment: u64,
    stream_seed: u64,
    exact: f64,
    ideal: Option<f64>,
    noisy: Option<f64>,
    mitigated: Option<f64>,
    unphysical: bool,
    predicted_noisy_variance: Option<f64>,
    predicted_mitigated_variance: Option<f64>,
}

pub fn write_results_to<W: Write>(writer: W, results: &[ExperimentResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in results {
        w.serialize(ResultRow {
            shots: r.shots,
            experiment: r.index,
            stream_seed: r.stream_seed,
            exact: r.exact,
            ideal: r.ideal,
            noisy: r.noisy,
            mitigated: r.mitigated,
            unphysical: r.unphysical,
            predicted_noisy_variance: r.predicted_noisy_variance,
            predicted_mitigated_variance: r.predicted_mitigated_variance,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_from<R: Read>(reader: R) -> csv::Result<Vec<ExperimentResult>> {
    csv_reader(reader)
        .deserialize()
        .map(|row| {
            let r: ResultRow = row?;
            Ok(ExperimentResult {
                shots: r.shots,
                index: r.experiment,
                stream_seed: r.stream_seed,
                exact: r.exact,
                ideal: r.ideal,
                noisy: r.noisy,
                mitigated: r.mitigated,
                unphysical: r.unphysical,
                predicted_noisy_variance: r.predicted_noisy_variance,
                predicted_mitigated_variance: r.predicted_mitigated_variance,
            })
        })
        .collect()
}

pub fn write_results(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| RemError::io(path, e))?;
    write_results_to(file, results).map_err(|e| RemError::csv(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ExperimentResult>> {
    let file = std::fs::File::open(path).map_err(|e| RemError::io(path, e))?;
    read_results_from(file).map_err(|e| RemError::csv(path, e))
}
