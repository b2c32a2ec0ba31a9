//! Uncorrelated per-qubit readout bit flips, applied to classical outcomes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{BitFlipModel, OutcomeDistribution, PauliZString, ShotHistogram, StateVector};
use crate::sim::{outcome_distribution, OutcomeSampler};

fn check_model(qubits: usize, model: &BitFlipModel) -> Result<()> {
    if model.qubit_count() != qubits {
        return Err(Error::DimensionMismatch { expected: qubits, found: model.qubit_count() });
    }
    Ok(())
}

/// Misreads each bit of `outcome` independently: a 0 on qubit `q` becomes 1
/// with probability `p0`, a 1 becomes 0 with probability `p1`.
///
/// Exactly one uniform draw is consumed per qubit, so the stream position
/// does not depend on the outcome.
pub fn flip_outcome<R: Rng + ?Sized>(outcome: usize, model: &BitFlipModel, rng: &mut R) -> usize {
    let mut read = outcome;
    for (q, flip) in model.flips().iter().enumerate() {
        let u = rng.random::<f64>();
        let p = if outcome >> q & 1 == 0 { flip.p0 } else { flip.p1 };
        if u < p {
            read ^= 1 << q;
        }
    }
    read
}

/// Pushes `dist` through the tensor product of the per-qubit stochastic
/// matrices `[[1 - p0, p1], [p0, 1 - p1]]`.
pub fn channel_exact(dist: &OutcomeDistribution, model: &BitFlipModel) -> Result<OutcomeDistribution> {
    check_model(dist.qubits(), model)?;
    let mut probs = dist.probabilities().to_vec();
    for (q, flip) in model.flips().iter().enumerate() {
        apply_qubit_channel(&mut probs, q, flip.p0, flip.p1);
    }
    Ok(OutcomeDistribution::from_raw(dist.qubits(), probs))
}

pub(crate) fn apply_qubit_channel(probs: &mut [f64], qubit: usize, p0: f64, p1: f64) {
    let bit = 1usize << qubit;
    for i in 0..probs.len() {
        if i & bit == 0 {
            let (a0, a1) = (probs[i], probs[i | bit]);
            probs[i] = (1.0 - p0) * a0 + p1 * a1;
            probs[i | bit] = p0 * a0 + (1.0 - p1) * a1;
        }
    }
}

/// Infinite-shot expectation of `op` read out through the channel.
pub fn noisy_expectation_exact(state: &StateVector, op: &PauliZString, model: &BitFlipModel) -> Result<f64> {
    if op.qubits() != state.qubits() {
        return Err(Error::DimensionMismatch { expected: state.qubits(), found: op.qubits() });
    }
    channel_exact(&outcome_distribution(state), model)?.expectation(op)
}

/// Noisy expectations of all 2^Q operators, indexed by mask.
pub fn noisy_expectation_vector(state: &StateVector, model: &BitFlipModel) -> Result<alloc::vec::Vec<f64>> {
    Ok(channel_exact(&outcome_distribution(state), model)?.expectation_vector())
}

/// Samples `shots` outcomes and reads each one through the channel.
///
/// Outcomes and flips come from separate streams, so a noiseless model
/// reproduces [`crate::sim::sample_shots`] on the same outcome stream.
pub fn sample_noisy_shots<R1, R2>(
    dist: &OutcomeDistribution,
    model: &BitFlipModel,
    shots: u64,
    outcomes: &mut R1,
    flips: &mut R2,
) -> Result<ShotHistogram>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    check_model(dist.qubits(), model)?;
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let sampler = OutcomeSampler::new(dist);
    let mut hist = ShotHistogram::empty(dist.qubits())?;
    for _ in 0..shots {
        hist.record(flip_outcome(sampler.sample(outcomes), model, flips));
    }
    Ok(hist)
}
