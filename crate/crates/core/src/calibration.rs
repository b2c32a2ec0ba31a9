//! Bit-flip calibration from basis-state preparations, and the simulated
//! backends it runs against.

use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{BitFlipModel, QubitFlip, ShotHistogram};
use crate::noise::{channel_exact, sample_noisy_shots};
use crate::rng::{stream, FLIP_STREAM, OUTCOME_STREAM};
use crate::sim::{outcome_distribution, sample_shots, Circuit, Gate};

/// Default shots per calibration circuit.
pub const DEFAULT_CALIBRATION_SHOTS: u64 = 8192;

/// Something that runs circuits and returns measurement histograms.
pub trait Backend {
    fn execute(&self, circuit: &Circuit, shots: u64, rng: &mut dyn RngCore) -> Result<ShotHistogram>;
}

/// Noise-free sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdealBackend;

impl Backend for IdealBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, rng: &mut dyn RngCore) -> Result<ShotHistogram> {
        sample_shots(&outcome_distribution(&circuit.run()?), shots, rng)
    }
}

/// Shot sampling followed by readout bit flips.
///
/// Outcome and flip streams are both seeded from one draw of the caller's
/// stream.
#[derive(Debug, Clone)]
pub struct SampledBackend {
    pub model: BitFlipModel,
}

impl Backend for SampledBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, rng: &mut dyn RngCore) -> Result<ShotHistogram> {
        let seed = rng.next_u64();
        let dist = outcome_distribution(&circuit.run()?);
        sample_noisy_shots(
            &dist,
            &self.model,
            shots,
            &mut stream(seed, OUTCOME_STREAM),
            &mut stream(seed, FLIP_STREAM),
        )
    }
}

/// Deterministic backend returning `shots` times the exact noisy
/// probabilities, rounded by largest remainder so the counts sum to `shots`.
#[derive(Debug, Clone)]
pub struct ExactChannelBackend {
    pub model: BitFlipModel,
}

impl Backend for ExactChannelBackend {
    fn execute(&self, circuit: &Circuit, shots: u64, _rng: &mut dyn RngCore) -> Result<ShotHistogram> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let noisy = channel_exact(&outcome_distribution(&circuit.run()?), &self.model)?;
        let scaled: Vec<f64> = noisy.probabilities().iter().map(|p| p * shots as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|x| libm::floor(*x) as u64).collect();
        let mut missing = shots - counts.iter().sum::<u64>().min(shots);
        let mut order: Vec<usize> = (0..scaled.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (scaled[a] - libm::floor(scaled[a]), scaled[b] - libm::floor(scaled[b]));
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for i in order {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        ShotHistogram::from_counts(circuit.qubits(), counts, shots)
    }
}

/// Estimates per-qubit flip probabilities from one all-`|0⟩` run and one
/// all-`|1⟩` run (an `X` on every qubit), `shots` each.
///
/// `p0` of qubit `q` is the fraction of all-zero shots reading 1 on `q`, `p1`
/// the fraction of all-one shots reading 0. Standard errors are binomial.
pub fn calibrate<B: Backend + ?Sized>(
    backend: &B,
    qubits: usize,
    shots: u64,
    rng: &mut dyn RngCore,
) -> Result<BitFlipModel> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let zeros = Circuit::new(qubits)?;
    let mut ones = Circuit::new(qubits)?;
    for qubit in 0..qubits {
        ones.push(Gate::X { qubit })?;
    }
    let zero_hist = backend.execute(&zeros, shots, rng)?;
    let one_hist = backend.execute(&ones, shots, rng)?;
    for hist in [&zero_hist, &one_hist] {
        if hist.qubits() != qubits || hist.shots() != shots {
            return Err(Error::Backend("histogram does not match the calibration request".into()));
        }
    }

    let n = shots as f64;
    let mut flips = Vec::with_capacity(qubits);
    for q in 0..qubits {
        let read = |hist: &ShotHistogram, bit: usize| -> u64 {
            hist.counts()
                .iter()
                .enumerate()
                .filter(|(b, _)| b >> q & 1 == bit)
                .map(|(_, c)| c)
                .sum()
        };
        let p0 = read(&zero_hist, 1) as f64 / n;
        let p1 = read(&one_hist, 0) as f64 / n;
        if p0 + p1 >= 1.0 {
            return Err(Error::NonInvertible { qubit: q, sum: p0 + p1 });
        }
        flips.push(QubitFlip {
            p0,
            p1,
            shots_used: Some(shots),
            stderr0: Some(libm::sqrt(p0 * (1.0 - p0) / n)),
            stderr1: Some(libm::sqrt(p1 * (1.0 - p1) / n)),
        });
    }
    BitFlipModel::new(flips)
}
