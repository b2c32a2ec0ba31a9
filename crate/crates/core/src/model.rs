//! Value types shared by every stage of the pipeline.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::{ABSOLUTE_MAX_QUBITS, DEFAULT_MAX_QUBITS};

const NORM_TOLERANCE: f64 = 1e-12;

/// |1 - p0 - p1| below this counts as a singular channel.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > ABSOLUTE_MAX_QUBITS {
        return Err(Error::QubitCount { qubits, max: ABSOLUTE_MAX_QUBITS });
    }
    Ok(())
}

#[inline]
pub(crate) fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

/// `(-1)^{popcount(outcome & mask)}`.
#[inline]
pub fn eigenvalue(outcome: usize, mask: usize) -> f64 {
    if parity(outcome & mask) {
        -1.0
    } else {
        1.0
    }
}

/// A tensor product of `I` and `Z` factors.
///
/// Bit `q` of the mask selects `Z` on qubit `q`; the empty mask is the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PauliZString {
    qubits: usize,
    mask: usize,
}

impl PauliZString {
    pub fn new(qubits: usize, mask: usize) -> Result<Self> {
        check_qubits(qubits)?;
        if mask >> qubits != 0 {
            return Err(Error::MaskOutOfRange { mask, qubits });
        }
        Ok(Self { qubits, mask })
    }

    pub fn identity(qubits: usize) -> Result<Self> {
        Self::new(qubits, 0)
    }

    /// `Z` on a single qubit.
    pub fn z(qubits: usize, qubit: usize) -> Result<Self> {
        if qubit >= qubits {
            return Err(Error::QubitIndex { qubit, qubits });
        }
        Self::new(qubits, 1 << qubit)
    }

    /// `Z ⊗ Z ⊗ ... ⊗ Z`.
    pub fn all_z(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        Self::new(qubits, (1 << qubits) - 1)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn mask(&self) -> usize {
        self.mask
    }

    pub fn is_identity(&self) -> bool {
        self.mask == 0
    }

    /// Number of `Z` factors.
    pub fn weight(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Qubits carrying a `Z`, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.qubits).filter(move |q| self.mask >> q & 1 == 1)
    }
}

/// Position of `op` in the canonical operator order. The order is the integer
/// order of the masks, which makes the ω matrix lower triangular.
pub fn operator_index(op: &PauliZString) -> usize {
    op.mask
}

/// Iterates over every submask of `mask`, including `mask` and `0`, in
/// decreasing order.
pub fn submasks(mask: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(mask);
    core::iter::from_fn(move || {
        let current = next?;
        next = if current == 0 { None } else { Some((current - 1) & mask) };
        Some(current)
    })
}

/// Readout error rates for one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QubitFlip {
    /// Probability of reading a prepared `|0⟩` as 1.
    pub p0: f64,
    /// Probability of reading a prepared `|1⟩` as 0.
    pub p1: f64,
    pub shots_used: Option<u64>,
    pub stderr0: Option<f64>,
    pub stderr1: Option<f64>,
}

impl QubitFlip {
    pub fn new(p0: f64, p1: f64) -> Self {
        Self { p0, p1, shots_used: None, stderr0: None, stderr1: None }
    }

    /// γ(Z) = 1 - p0 - p1.
    pub fn gamma_z(&self) -> f64 {
        1.0 - self.p0 - self.p1
    }

    /// γ(I) = p1 - p0, the offset the channel adds to ⟨Z⟩.
    pub fn gamma_i(&self) -> f64 {
        self.p1 - self.p0
    }
}

/// Uncorrelated per-qubit bit-flip probabilities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitFlipModel {
    qubits: Vec<QubitFlip>,
}

impl BitFlipModel {
    /// Builds a model whose probabilities lie in `[0, 1)` and whose ω matrix
    /// is invertible.
    pub fn new(qubits: Vec<QubitFlip>) -> Result<Self> {
        check_qubits(qubits.len())?;
        for (q, flip) in qubits.iter().enumerate() {
            for value in [flip.p0, flip.p1] {
                if !(0.0..1.0).contains(&value) {
                    return Err(Error::InvalidProbability { qubit: q, value });
                }
            }
            let sum = flip.p0 + flip.p1;
            if (sum - 1.0).abs() < SINGULAR_TOLERANCE {
                return Err(Error::NonInvertible { qubit: q, sum });
            }
        }
        Ok(Self { qubits })
    }

    /// Builds a model from `(p0, p1)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(p0, p1)| QubitFlip::new(p0, p1)).collect())
    }

    /// Builds a model allowing any probability in `[0, 1]`, including
    /// deterministic flips and non-invertible channels. Meant for exercising
    /// the channel itself; mitigation rejects such models.
    pub fn new_unchecked(qubits: Vec<QubitFlip>) -> Self {
        assert!(
            qubits.iter().all(|f| (0.0..=1.0).contains(&f.p0) && (0.0..=1.0).contains(&f.p1)),
            "bit-flip probabilities must lie in [0, 1]"
        );
        Self { qubits }
    }

    pub fn noiseless(qubits: usize) -> Result<Self> {
        Self::symmetric(qubits, 0.0)
    }

    pub fn symmetric(qubits: usize, p: f64) -> Result<Self> {
        Self::new(vec![QubitFlip::new(p, p); qubits])
    }

    /// Draws a model with every probability uniform in `[low, high)`.
    pub fn random<R: Rng + ?Sized>(qubits: usize, low: f64, high: f64, rng: &mut R) -> Result<Self> {
        let flips = (0..qubits)
            .map(|_| {
                let p0 = low + (high - low) * rng.random::<f64>();
                let p1 = low + (high - low) * rng.random::<f64>();
                QubitFlip::new(p0, p1)
            })
            .collect();
        Self::new(flips)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, q: usize) -> &QubitFlip {
        &self.qubits[q]
    }

    pub fn flips(&self) -> &[QubitFlip] {
        &self.qubits
    }

    /// Fails with [`Error::NonInvertible`] on the first qubit whose
    /// γ(Z) vanishes.
    pub fn check_invertible(&self) -> Result<()> {
        for (qubit, flip) in self.qubits.iter().enumerate() {
            if flip.gamma_z().abs() < SINGULAR_TOLERANCE {
                return Err(Error::NonInvertible { qubit, sum: flip.p0 + flip.p1 });
            }
        }
        Ok(())
    }
}

/// A pure state on `Q` qubits as 2^Q amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0⟩`.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, outcome: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1usize << qubits;
        if outcome >= dim {
            return Err(Error::MaskOutOfRange { mask: outcome, qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[outcome] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amplitudes })
    }

    /// Wraps amplitudes whose squared norm is 1 within 1e-12.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two().max(2), found: dim });
        }
        let qubits = dim.trailing_zeros() as usize;
        check_qubits(qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { qubits, amplitudes })
    }

    /// A random state with independent standard-normal real and imaginary
    /// parts, normalized (Haar-distributed).
    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1usize << qubits;
        let mut amplitudes: Vec<Complex64> = (0..dim)
            .map(|_| {
                let (re, im) = crate::rng::standard_normal_pair(rng);
                Complex64::new(re, im)
            })
            .collect();
        let norm = libm::sqrt(amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>());
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes)
    }

    /// Tensor product of single-qubit states `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`,
    /// with `angles[q] = (θ, φ)` for qubit `q`.
    pub fn product(angles: &[(f64, f64)]) -> Result<Self> {
        check_qubits(angles.len())?;
        let dim = 1usize << angles.len();
        let amplitudes = (0..dim)
            .map(|b| {
                angles.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (q, &(theta, phi))| {
                    let half = theta / 2.0;
                    if b >> q & 1 == 0 {
                        acc * libm::cos(half)
                    } else {
                        acc * Complex64::from_polar(libm::sin(half), phi)
                    }
                })
            })
            .collect();
        Self::from_amplitudes(amplitudes)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Exact probabilities of the 2^Q measurement outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    qubits: usize,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        let dim = probabilities.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two().max(2), found: dim });
        }
        let qubits = dim.trailing_zeros() as usize;
        check_qubits(qubits)?;
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidDistribution(sum));
        }
        Ok(Self { qubits, probabilities })
    }

    pub(crate) fn from_raw(qubits: usize, probabilities: Vec<f64>) -> Self {
        Self { qubits, probabilities }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, outcome: usize) -> f64 {
        self.probabilities[outcome]
    }

    pub fn expectation(&self, op: &PauliZString) -> Result<f64> {
        if op.qubits() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: op.qubits() });
        }
        if op.is_identity() {
            return Ok(1.0);
        }
        Ok(self
            .probabilities
            .iter()
            .enumerate()
            .map(|(b, p)| p * eigenvalue(b, op.mask()))
            .sum())
    }

    /// Expectations of all 2^Q operators, indexed by mask.
    pub fn expectation_vector(&self) -> Vec<f64> {
        let mut out = self.probabilities.clone();
        walsh_hadamard(&mut out);
        out[0] = 1.0;
        out
    }

    /// Total-variation distance to another distribution over the same space.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// In-place unnormalized Walsh–Hadamard transform. Maps a vector of weights
/// over outcomes to `Σ_b w_b (-1)^{popcount(b & mask)}` for every mask.
pub(crate) fn walsh_hadamard(values: &mut [f64]) {
    let n = values.len();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                let (a, b) = (values[i], values[i + half]);
                values[i] = a + b;
                values[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Outcome counts from `shots` repeated measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    qubits: usize,
    counts: Vec<u64>,
    shots: u64,
}

impl ShotHistogram {
    pub fn empty(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        Ok(Self { qubits, counts: vec![0; 1 << qubits], shots: 0 })
    }

    pub fn from_counts(qubits: usize, counts: Vec<u64>, shots: u64) -> Result<Self> {
        check_qubits(qubits)?;
        if counts.len() != 1 << qubits {
            return Err(Error::DimensionMismatch { expected: 1 << qubits, found: counts.len() });
        }
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let counted: u64 = counts.iter().sum();
        if counted != shots {
            return Err(Error::CountMismatch { counted, shots });
        }
        Ok(Self { qubits, counts, shots })
    }

    pub(crate) fn record(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
        self.shots += 1;
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, outcome: usize) -> u64 {
        self.counts[outcome]
    }

    /// Empirical estimate of every operator expectation, indexed by mask. The
    /// identity entry is exactly 1.
    pub fn expectation_vector(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        walsh_hadamard(&mut out);
        let shots = self.shots as f64;
        for v in &mut out {
            *v /= shots;
        }
        out[0] = 1.0;
        out
    }

    pub fn expectation(&self, op: &PauliZString) -> Result<f64> {
        if op.qubits() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: op.qubits() });
        }
        if op.is_identity() {
            return Ok(1.0);
        }
        let signed: i64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(b, &c)| if parity(b & op.mask()) { -(c as i64) } else { c as i64 })
            .sum();
        Ok(signed as f64 / self.shots as f64)
    }
}

/// Coefficients of `value ≈ e^beta · s^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerLawFit {
    pub alpha: f64,
    pub beta: f64,
    /// Root-mean-square of the residuals in log space.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn prefactor(&self) -> f64 {
        libm::exp(self.beta)
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        libm::exp(self.beta + self.alpha * libm::log(s))
    }
}

/// How many flip orders the mitigated estimate keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Truncation {
    #[default]
    Full,
    Order(usize),
}

/// Which model the mitigation step inverts.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ModelSource {
    /// The simulated device's own channel.
    #[default]
    Device,
    Explicit(BitFlipModel),
    /// Estimate the model by calibration runs on the simulated device.
    Calibrated {
        shots: u64,
        /// Recalibrate for every shot count instead of once per suite.
        per_batch: bool,
    },
}

/// How noisy expectation vectors are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `s` sampled shots per experiment.
    #[default]
    Shots,
    /// Exact channel probabilities, no shot noise.
    Exact,
}

/// Everything that determines a benchmarking campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub qubits: usize,
    /// Ansatz angles in radians, in [`crate::sim::build_ansatz`] order.
    pub angles: Vec<f64>,
    pub operator: PauliZString,
    pub shot_grid: Vec<u64>,
    /// Experiments per shot count.
    pub experiments: usize,
    pub seed: u64,
    pub truncation: Truncation,
    /// The readout channel of the simulated device.
    pub device_noise: BitFlipModel,
    pub model_source: ModelSource,
    pub sampling: Sampling,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.qubits)?;
        if self.qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::QubitCount { qubits: self.qubits, max: DEFAULT_MAX_QUBITS });
        }
        let expected = crate::sim::ansatz_parameter_count(self.qubits)?;
        if self.angles.len() != expected {
            return Err(Error::ParameterCount { expected, found: self.angles.len() });
        }
        if self.operator.qubits() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: self.operator.qubits() });
        }
        if self.device_noise.qubit_count() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, found: self.device_noise.qubit_count() });
        }
        if self.shot_grid.is_empty() {
            return Err(Error::InvalidConfig("empty shot grid".into()));
        }
        if self.shot_grid.iter().any(|&s| s == 0) {
            return Err(Error::ZeroShots);
        }
        if self.experiments < 2 {
            return Err(Error::TooFewSamples { needed: 2, found: self.experiments });
        }
        if let Truncation::Order(order) = self.truncation {
            if order > self.qubits {
                return Err(Error::TruncationOrder { order, qubits: self.qubits });
            }
        }
        match &self.model_source {
            ModelSource::Device => self.device_noise.check_invertible()?,
            ModelSource::Explicit(model) => {
                if model.qubit_count() != self.qubits {
                    return Err(Error::DimensionMismatch { expected: self.qubits, found: model.qubit_count() });
                }
                model.check_invertible()?;
            }
            ModelSource::Calibrated { shots, .. } => {
                if *shots == 0 {
                    return Err(Error::ZeroShots);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_index_examples() {
        assert_eq!(operator_index(&PauliZString::identity(2).unwrap()), 0);
        assert_eq!(operator_index(&PauliZString::z(2, 0).unwrap()), 1);
        assert_eq!(operator_index(&PauliZString::all_z(3).unwrap()), 7);
    }

    #[test]
    fn operator_index_is_a_bijection() {
        for q in 1..=5 {
            let mut seen = vec![false; 1 << q];
            for mask in 0..1usize << q {
                let idx = operator_index(&PauliZString::new(q, mask).unwrap());
                assert!(!seen[idx]);
                seen[idx] = true;
            }
            assert!(seen.iter().all(|&s| s));
            assert!(PauliZString::new(q, 1 << q).is_err());
        }
    }

    #[test]
    fn submasks_enumerates_all_subsets() {
        let mut subs: Vec<usize> = submasks(0b1011).collect();
        subs.sort_unstable();
        assert_eq!(subs, vec![0, 1, 2, 3, 8, 9, 10, 11]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn model_validation() {
        assert!(matches!(
            BitFlipModel::from_pairs(&[(0.5, 0.5)]),
            Err(Error::NonInvertible { qubit: 0, .. })
        ));
        assert!(matches!(
            BitFlipModel::from_pairs(&[(0.1, 0.1), (1.0, 0.0)]),
            Err(Error::InvalidProbability { qubit: 1, .. })
        ));
        assert!(BitFlipModel::from_pairs(&[(0.6, 0.6)]).is_ok());
    }

    #[test]
    fn histogram_counts_must_sum_to_shots() {
        assert!(ShotHistogram::from_counts(1, vec![3, 4], 7).is_ok());
        assert_eq!(
            ShotHistogram::from_counts(1, vec![3, 4], 8),
            Err(Error::CountMismatch { counted: 7, shots: 8 })
        );
    }

    #[test]
    fn histogram_expectation_vector_matches_direct_sum() {
        let h = ShotHistogram::from_counts(2, vec![5, 1, 3, 7], 16).unwrap();
        let v = h.expectation_vector();
        for mask in 0..4 {
            let op = PauliZString::new(2, mask).unwrap();
            assert!((v[mask] - h.expectation(&op).unwrap()).abs() < 1e-15);
        }
        assert_eq!(v[0], 1.0);
    }

    #[test]
    fn state_normalization_is_enforced() {
        let half = Complex64::new(0.5, 0.0);
        assert!(StateVector::from_amplitudes(vec![half; 4]).is_ok());
        assert!(matches!(
            StateVector::from_amplitudes(vec![half; 2]),
            Err(Error::NotNormalized(_))
        ));
    }
}
