//! Variance of noisy and mitigated estimators, and the extra samples
//! mitigation costs.
//!
//! Each qubit's readout realizes one of `Z` (no flip), `-Z` (both outcomes
//! flipped), `-I` (only a prepared 0 flips) or `+I` (only a prepared 1
//! flips), so `⟨ψ|Õ|ψ⟩` is a random variable over flip realizations. Its
//! variance is the bit-flip component; the flip-averaged quantum variance
//! `1 - E[⟨ψ|Õ|ψ⟩²]` is the quantum-mechanical component. Both scale as
//! `1/s` and sum to the per-shot variance `1 - (E⟨Õ⟩)²` of a ±1 outcome.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mitigation::expansion_coefficient;
use crate::model::{submasks, BitFlipModel, PauliZString, PowerLawFit};

/// Coefficients of the single-qubit bit-flip variance
/// `a1·z² - 2·a2·z + a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitflipCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl BitflipCoefficients {
    pub fn new(p0: f64, p1: f64) -> Self {
        Self {
            a1: (p1 + p0) * (1.0 - p0 - p1) + 2.0 * p0 * p1,
            a2: (1.0 - p0 - p1) * (p1 - p0),
            a3: p0 + p1 - p0 * p0 - p1 * p1,
        }
    }
}

/// Per-shot bit-flip variance of `Z̃` given the noise-free `⟨Z⟩ = z`.
pub fn single_qubit_bf_variance(z: f64, p0: f64, p1: f64) -> f64 {
    let c = BitflipCoefficients::new(p0, p1);
    c.a1 * z * z - 2.0 * c.a2 * z + c.a3
}

/// Per-shot quantum variance `1 - ⟨Z̃⟩²` of a ±1 outcome with mean `noisy_z`.
pub fn single_qubit_qm_variance(noisy_z: f64) -> Result<f64> {
    if !(noisy_z.abs() <= 1.0) {
        return Err(Error::ExpectationOutOfRange(noisy_z));
    }
    Ok(1.0 - noisy_z * noisy_z)
}

/// Mean and variance of a random variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Moments of `X·Y` for independent `X`, `Y`:
/// `V = Vx·Vy + Vx·Ey² + Ex²·Vy`.
pub fn compose_independent(x: Moments, y: Moments) -> Moments {
    Moments {
        mean: x.mean * y.mean,
        variance: x.variance * y.variance + x.variance * y.mean * y.mean + x.mean * x.mean * y.variance,
    }
}

/// Per-shot components of the noisy estimator variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePrediction {
    pub bitflip_component: f64,
    pub qm_component: f64,
}

impl VariancePrediction {
    pub fn per_shot(&self) -> f64 {
        self.bitflip_component + self.qm_component
    }

    pub fn total_per_s(&self, shots: u64) -> f64 {
        self.per_shot() / shots as f64
    }
}

fn check_vector(values: &[f64], qubits: usize) -> Result<()> {
    if values.len() != 1 << qubits {
        return Err(Error::DimensionMismatch { expected: 1 << qubits, found: values.len() });
    }
    Ok(())
}

fn check_model(op: &PauliZString, model: &BitFlipModel) -> Result<()> {
    if model.qubit_count() != op.qubits() {
        return Err(Error::DimensionMismatch { expected: op.qubits(), found: model.qubit_count() });
    }
    Ok(())
}

/// Probability that qubit `q`'s readout realizes `±Z` (`true`) or `±I`.
fn realization_weight(model: &BitFlipModel, q: usize, keeps_z: bool) -> f64 {
    let f = model.qubit(q);
    let z = (1.0 - f.p0) * (1.0 - f.p1) + f.p0 * f.p1;
    if keeps_z {
        z
    } else {
        1.0 - z
    }
}

/// Bit-flip and quantum components of the per-shot variance of `op`.
///
/// `noisy` and `mitigated` are full expectation vectors (indexed by mask)
/// from the same data; the mitigated one stands in for the noise-free
/// expectations. `E[⟨Õ⟩²] = Σ_{T⊆S} P(T) ⟨Z_T⟩²`, where `P(T)` is the
/// probability that exactly the qubits in `T` keep their `Z`.
pub fn noisy_variance_components(
    op: &PauliZString,
    noisy: &[f64],
    mitigated: &[f64],
    model: &BitFlipModel,
) -> Result<VariancePrediction> {
    check_model(op, model)?;
    check_vector(noisy, op.qubits())?;
    check_vector(mitigated, op.qubits())?;
    let support = op.mask();
    let second_moment: f64 = submasks(support)
        .map(|term| {
            let weight: f64 = op
                .support()
                .map(|q| realization_weight(model, q, term >> q & 1 == 1))
                .product();
            weight * mitigated[term] * mitigated[term]
        })
        .sum();
    let mean = noisy[support];
    Ok(VariancePrediction {
        bitflip_component: second_moment - mean * mean,
        qm_component: 1.0 - second_moment,
    })
}

/// Predicted variance of the noisy estimator of `op` at `shots` shots.
pub fn predicted_noisy_variance(
    op: &PauliZString,
    noisy: &[f64],
    mitigated: &[f64],
    model: &BitFlipModel,
    shots: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    Ok(noisy_variance_components(op, noisy, mitigated, model)?.total_per_s(shots))
}

/// Per-shot bit-flip variance of `op` for uncorrelated qubits, composing the
/// single-qubit variances pairwise with [`compose_independent`].
///
/// `mitigated_z[q]` and `noisy_z[q]` are the single-qubit expectations of
/// qubit `q`. Agrees with [`noisy_variance_components`] on product states.
pub fn product_bf_variance(
    op: &PauliZString,
    mitigated_z: &[f64],
    noisy_z: &[f64],
    model: &BitFlipModel,
) -> Result<f64> {
    check_model(op, model)?;
    for values in [mitigated_z, noisy_z] {
        if values.len() != op.qubits() {
            return Err(Error::DimensionMismatch { expected: op.qubits(), found: values.len() });
        }
    }
    let composed = op
        .support()
        .map(|q| {
            let f = model.qubit(q);
            Moments { mean: noisy_z[q], variance: single_qubit_bf_variance(mitigated_z[q], f.p0, f.p1) }
        })
        .reduce(compose_independent)
        .map_or(0.0, |m| m.variance);
    Ok(composed)
}

/// Predicted variance of the mitigated estimator of `op` at `shots` shots.
///
/// The mitigated value is `Σ_{T⊆S} c_T Ŷ_T`, a fixed linear combination of
/// noisy estimators computed from the same shots. Per shot `y_T y_U =
/// y_{T⊕U}`, so the covariance of every pair follows from the noisy
/// expectation vector alone: `Cov(y_T, y_U) = Ẽ_{T⊕U} - Ẽ_T Ẽ_U`.
pub fn predicted_mitigated_variance(
    op: &PauliZString,
    noisy: &[f64],
    model: &BitFlipModel,
    shots: u64,
) -> Result<f64> {
    check_model(op, model)?;
    check_vector(noisy, op.qubits())?;
    model.check_invertible()?;
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let support = op.mask();
    let terms: Vec<(usize, f64)> = submasks(support)
        .map(|t| (t, expansion_coefficient(model, support, t)))
        .collect();
    let mean: f64 = terms.iter().map(|&(t, c)| c * noisy[t]).sum();
    let second: f64 = terms
        .iter()
        .map(|&(t, ct)| terms.iter().map(|&(u, cu)| ct * cu * noisy[t ^ u]).sum::<f64>())
        .sum();
    Ok((second - mean * mean) / shots as f64)
}

/// Mitigated-estimator variance for uncorrelated qubits, ignoring the
/// covariance between the noisy estimators.
///
/// Sums `c_T² · V_T` over `T ⊆ S`, where `V_T` composes the per-shot
/// single-qubit variances `noisy_var[q]` and means `noisy_z[q]` over `T`. For
/// two qubits this is
///
/// ```text
/// (1/(γZ₂γZ₁))² (Ṽ₂Ṽ₁ + Ṽ₂Ẽ₁² + Ẽ₂²Ṽ₁) + (γI₁/(γZ₂γZ₁))² Ṽ₂ + (γI₂/(γZ₂γZ₁))² Ṽ₁
/// ```
///
/// divided by `shots`. Exact for product states under symmetric noise.
pub fn predicted_mitigated_variance_uncorrelated(
    op: &PauliZString,
    noisy_var: &[f64],
    noisy_z: &[f64],
    model: &BitFlipModel,
    shots: u64,
) -> Result<f64> {
    check_model(op, model)?;
    model.check_invertible()?;
    for values in [noisy_var, noisy_z] {
        if values.len() != op.qubits() {
            return Err(Error::DimensionMismatch { expected: op.qubits(), found: values.len() });
        }
    }
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let support = op.mask();
    let per_shot: f64 = submasks(support)
        .map(|term| {
            let c = expansion_coefficient(model, support, term);
            let v = (0..op.qubits())
                .filter(|q| term >> q & 1 == 1)
                .map(|q| Moments { mean: noisy_z[q], variance: noisy_var[q] })
                .reduce(compose_independent)
                .map_or(0.0, |m| m.variance);
            c * c * v
        })
        .sum();
    Ok(per_shot / shots as f64)
}

/// Sample overhead of mitigation derived from power-law fits of the noisy
/// and mitigated variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overhead {
    /// `s1/s0 = e^{(β0-β1)/α1} · s0^{α0/α1 - 1}`.
    pub ratio: f64,
    /// `e^{(β0-β1)/α1}`.
    pub prefactor: f64,
    /// `α0/α1 - 1`.
    pub exponent: f64,
    /// The prefactor alone, when `|α0 - α1|` is below the threshold and the
    /// ratio is effectively constant in `s0`.
    pub constant_approximation: Option<f64>,
}

/// Default `|α0 - α1|` below which the overhead counts as constant.
pub const DEFAULT_CONSTANT_THRESHOLD: f64 = 0.05;

pub fn overhead_ratio(noisy: &PowerLawFit, mitigated: &PowerLawFit, s0: f64, threshold: f64) -> Result<Overhead> {
    if mitigated.alpha == 0.0 {
        return Err(Error::ZeroExponent);
    }
    let prefactor = libm::exp((noisy.beta - mitigated.beta) / mitigated.alpha);
    let exponent = noisy.alpha / mitigated.alpha - 1.0;
    Ok(Overhead {
        ratio: prefactor * libm::pow(s0, exponent),
        prefactor,
        exponent,
        constant_approximation: ((noisy.alpha - mitigated.alpha).abs() < threshold).then_some(prefactor),
    })
}
