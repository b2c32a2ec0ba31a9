//! Dense statevector simulation of the benchmark circuits and ideal
//! projective measurement.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{check_qubits, eigenvalue, OutcomeDistribution, PauliZString, ShotHistogram, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    X { qubit: usize },
}

impl Gate {
    fn check(&self, qubits: usize) -> Result<()> {
        let in_range = |qubit: usize| {
            if qubit < qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex { qubit, qubits })
            }
        };
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } | Gate::X { qubit } => in_range(qubit),
            Gate::Cnot { control, target } => {
                in_range(control)?;
                in_range(target)?;
                if control == target {
                    return Err(Error::SameControlTarget(control));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        Ok(Self { qubits, gates: Vec::new() })
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut circuit = Self::new(qubits)?;
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.check(self.qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Applies the circuit to `|0...0⟩`.
    pub fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::zero(self.qubits)?;
        for gate in &self.gates {
            apply_gate_in_place(&mut state, gate)?;
        }
        Ok(state)
    }
}

/// Applies a 2x2 unitary `[[a, b], [c, d]]` to `qubit`.
fn apply_single(amps: &mut [Complex64], qubit: usize, m: [[Complex64; 2]; 2]) {
    let bit = 1usize << qubit;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

pub fn apply_gate_in_place(state: &mut StateVector, gate: &Gate) -> Result<()> {
    gate.check(state.qubits())?;
    let amps = state.amplitudes_mut();
    match *gate {
        Gate::Rx { qubit, theta } => {
            let c = Complex64::new(libm::cos(theta / 2.0), 0.0);
            let s = Complex64::new(0.0, -libm::sin(theta / 2.0));
            apply_single(amps, qubit, [[c, s], [s, c]]);
        }
        Gate::Rz { qubit, theta } => {
            let zero = Complex64::new(0.0, 0.0);
            let lo = Complex64::from_polar(1.0, -theta / 2.0);
            let hi = Complex64::from_polar(1.0, theta / 2.0);
            apply_single(amps, qubit, [[lo, zero], [zero, hi]]);
        }
        Gate::X { qubit } => {
            let bit = 1usize << qubit;
            for i in 0..amps.len() {
                if i & bit == 0 {
                    amps.swap(i, i | bit);
                }
            }
        }
        Gate::Cnot { control, target } => {
            let (c, t) = (1usize << control, 1usize << target);
            for i in 0..amps.len() {
                if i & c != 0 && i & t == 0 {
                    amps.swap(i, i | t);
                }
            }
        }
    }
    Ok(())
}

/// Returns `state` with `gate` applied.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, gate)?;
    Ok(out)
}

/// Number of rotation layers (each followed by a CNOT chain) in the ansatz.
pub fn ansatz_layers(qubits: usize) -> Result<usize> {
    match qubits {
        2 => Ok(1),
        3 => Ok(2),
        other => Err(Error::UnsupportedAnsatz(other)),
    }
}

/// Angles consumed by [`build_ansatz`]: two per qubit per layer, plus the
/// closing rotation column.
pub fn ansatz_parameter_count(qubits: usize) -> Result<usize> {
    Ok(2 * qubits * (ansatz_layers(qubits)? + 1))
}

/// Builds the layered variational circuit.
///
/// Each layer applies `RX(θ)` then `RZ(φ)` to every qubit (qubit 0 first) and
/// then a CNOT chain `0 → 1 (→ 2)`. Three qubits use two layers, two qubits
/// use one; a final `RX`/`RZ` column closes the circuit. Angles are consumed
/// in gate order.
pub fn build_ansatz(qubits: usize, params: &[f64]) -> Result<Circuit> {
    let layers = ansatz_layers(qubits)?;
    let expected = ansatz_parameter_count(qubits)?;
    if params.len() != expected {
        return Err(Error::ParameterCount { expected, found: params.len() });
    }
    let mut circuit = Circuit::new(qubits)?;
    let mut angles = params.iter().copied();
    let mut rotations = |circuit: &mut Circuit| -> Result<()> {
        for qubit in 0..qubits {
            // Counts were checked above.
            let rx = angles.next().unwrap_or_default();
            let rz = angles.next().unwrap_or_default();
            circuit.push(Gate::Rx { qubit, theta: rx })?;
            circuit.push(Gate::Rz { qubit, theta: rz })?;
        }
        Ok(())
    };
    for _ in 0..layers {
        rotations(&mut circuit)?;
        for control in 0..qubits - 1 {
            circuit.push(Gate::Cnot { control, target: control + 1 })?;
        }
    }
    rotations(&mut circuit)?;
    Ok(circuit)
}

/// Draws ansatz angles uniformly from `[0, 2π)`.
pub fn random_angles<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Vec<f64>> {
    let n = ansatz_parameter_count(qubits)?;
    Ok((0..n).map(|_| rng.random::<f64>() * 2.0 * core::f64::consts::PI).collect())
}

/// `⟨ψ|O|ψ⟩` for a diagonal observable.
pub fn exact_expectation(state: &StateVector, op: &PauliZString) -> Result<f64> {
    if op.qubits() != state.qubits() {
        return Err(Error::DimensionMismatch { expected: state.qubits(), found: op.qubits() });
    }
    if op.is_identity() {
        return Ok(1.0);
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * eigenvalue(b, op.mask()))
        .sum())
}

/// Born-rule outcome probabilities of `state`.
pub fn outcome_distribution(state: &StateVector) -> OutcomeDistribution {
    let norm = state.norm_sqr();
    let probs = state.amplitudes().iter().map(|a| a.norm_sqr() / norm).collect();
    OutcomeDistribution::from_raw(state.qubits(), probs)
}

/// Inverse-CDF sampler over measurement outcomes.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    cumulative: Vec<f64>,
    last_supported: usize,
}

impl OutcomeSampler {
    pub fn new(dist: &OutcomeDistribution) -> Self {
        let mut total = 0.0;
        let cumulative = dist
            .probabilities()
            .iter()
            .map(|p| {
                total += p;
                total
            })
            .collect();
        let last_supported = dist.probabilities().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { cumulative, last_supported }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        // First bucket whose upper edge exceeds u; never a zero-width bucket.
        self.cumulative.partition_point(|&c| c <= u).min(self.last_supported)
    }
}

/// Draws `shots` independent outcomes from `dist`.
pub fn sample_shots<R: Rng + ?Sized>(dist: &OutcomeDistribution, shots: u64, rng: &mut R) -> Result<ShotHistogram> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let sampler = OutcomeSampler::new(dist);
    let mut hist = ShotHistogram::empty(dist.qubits())?;
    for _ in 0..shots {
        hist.record(sampler.sample(rng));
    }
    Ok(hist)
}
