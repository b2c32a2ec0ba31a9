//! Readout-error mitigation by inverting the ω matrix.
//!
//! Under uncorrelated bit flips the flip-averaged expectation of a noisy
//! operator `Õ` is a linear combination of noise-free expectations:
//!
//! ```text
//! E⟨Õ⟩ = Σ_O ω(O|Õ) ⟨O⟩,    ω(O|Õ) = Π_q Γ(O_q|Õ_q)
//! ```
//!
//! with `Γ(Z|Z̃) = γ(Z)`, `Γ(I|Z̃) = γ(I)`, `Γ(I|Ĩ) = 1` and `Γ(Z|Ĩ) = 0`.
//! Rows are indexed by the noisy operator and columns by the noise-free one,
//! both in mask order, so `ω` is lower triangular: a column is non-zero only
//! where its mask is a subset of the row mask.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{submasks, BitFlipModel, PauliZString, QubitFlip};

/// Selects the factor of `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Z,
    I,
}

/// `γ(Z) = 1 - p0 - p1`, `γ(I) = p1 - p0`.
pub fn gamma(which: Factor, p0: f64, p1: f64) -> f64 {
    match which {
        Factor::Z => 1.0 - p0 - p1,
        Factor::I => p1 - p0,
    }
}

/// Dense lower-triangular ω matrix over all 2^Q `{I, Z}` strings.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    qubits: usize,
    entries: Vec<f64>,
}

impl OmegaMatrix {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// `ω(O_col | Õ_row)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim() + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Maps noise-free expectations to flip-averaged noisy ones.
    pub fn apply(&self, exact: &[f64]) -> Result<Vec<f64>> {
        check_len(exact, self.dim())?;
        Ok((0..self.dim())
            .map(|row| submasks(row).map(|col| self.entry(row, col) * exact[col]).sum())
            .collect())
    }

    /// Solves `ω x = noisy` by forward substitution, visiting only the
    /// structurally non-zero columns of each row.
    pub fn solve(&self, noisy: &[f64]) -> Result<Vec<f64>> {
        check_len(noisy, self.dim())?;
        check_identity(noisy[0])?;
        let mut x = vec![0.0; self.dim()];
        x[0] = 1.0;
        for row in 1..self.dim() {
            let below: f64 = submasks(row)
                .skip(1)
                .map(|col| self.entry(row, col) * x[col])
                .sum();
            x[row] = (noisy[row] - below) / self.entry(row, row);
        }
        Ok(x)
    }
}

fn check_len(values: &[f64], dim: usize) -> Result<()> {
    if values.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: values.len() });
    }
    Ok(())
}

fn check_identity(value: f64) -> Result<()> {
    if (value - 1.0).abs() > 1e-12 {
        return Err(Error::IdentityExpectation(value));
    }
    Ok(())
}

fn gamma_factor(flip: &QubitFlip, noise_free_z: bool, noisy_z: bool) -> f64 {
    match (noise_free_z, noisy_z) {
        (true, true) => gamma(Factor::Z, flip.p0, flip.p1),
        (false, true) => gamma(Factor::I, flip.p0, flip.p1),
        (false, false) => 1.0,
        (true, false) => 0.0,
    }
}

pub fn build_omega(model: &BitFlipModel) -> Result<OmegaMatrix> {
    model.check_invertible()?;
    let qubits = model.qubit_count();
    let dim = 1usize << qubits;
    let mut entries = vec![0.0; dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            entries[row * dim + col] = model
                .flips()
                .iter()
                .enumerate()
                .map(|(q, flip)| gamma_factor(flip, col >> q & 1 == 1, row >> q & 1 == 1))
                .product();
        }
    }
    Ok(OmegaMatrix { qubits, entries })
}

/// Recovers noise-free expectations of every operator from noisy ones
/// (indexed by mask, identity entry 1).
pub fn mitigate(noisy: &[f64], model: &BitFlipModel) -> Result<Vec<f64>> {
    build_omega(model)?.solve(noisy)
}

/// Coefficient of `Ẽ_T` in the expansion of `⟨O_S⟩` for `T ⊆ S`:
/// `Π_{q∈T} 1/γ(Z_q) · Π_{q∈S\T} (-γ(I_q)/γ(Z_q))`.
pub fn expansion_coefficient(model: &BitFlipModel, support: usize, term: usize) -> f64 {
    model
        .flips()
        .iter()
        .enumerate()
        .filter(|(q, _)| support >> q & 1 == 1)
        .map(|(q, flip)| {
            if term >> q & 1 == 1 {
                1.0 / flip.gamma_z()
            } else {
                -flip.gamma_i() / flip.gamma_z()
            }
        })
        .product()
}

fn check_operator(op: &PauliZString, noisy: &[f64], model: &BitFlipModel) -> Result<()> {
    if model.qubit_count() != op.qubits() {
        return Err(Error::DimensionMismatch { expected: op.qubits(), found: model.qubit_count() });
    }
    check_len(noisy, 1 << op.qubits())?;
    check_identity(noisy[0])?;
    model.check_invertible()
}

/// Mitigated `⟨O⟩` from the closed-form inverse of the tensor-product ω,
/// keeping only terms that correct for at most `order` flipped qubits (terms
/// with at most `order` factors of γ(I)).
///
/// An `order` of at least the weight of `op` returns the forward-substitution
/// result of [`mitigate`] for `op`.
pub fn mitigate_truncated(op: &PauliZString, noisy: &[f64], model: &BitFlipModel, order: usize) -> Result<f64> {
    if order > op.qubits() {
        return Err(Error::TruncationOrder { order, qubits: op.qubits() });
    }
    check_operator(op, noisy, model)?;
    if order >= op.weight() {
        return Ok(mitigate(noisy, model)?[op.mask()]);
    }
    Ok(expansion_terms(op.mask(), noisy, model, order))
}

/// Mitigated `⟨O⟩` from the full closed-form expansion, without the
/// triangular solve.
pub fn mitigate_expansion(op: &PauliZString, noisy: &[f64], model: &BitFlipModel) -> Result<f64> {
    check_operator(op, noisy, model)?;
    Ok(expansion_terms(op.mask(), noisy, model, op.weight()))
}

fn expansion_terms(support: usize, noisy: &[f64], model: &BitFlipModel, order: usize) -> f64 {
    let weight = support.count_ones();
    submasks(support)
        .filter(|term| (weight - term.count_ones()) as usize <= order)
        .map(|term| expansion_coefficient(model, support, term) * noisy[term])
        .sum()
}

/// Masks whose mitigated value lies outside `[-1, 1]`. Such values are kept,
/// not clipped.
pub fn unphysical(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1.0)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(Factor::Z, 0.0, 0.0), 1.0);
        assert_eq!(gamma(Factor::I, 0.1, 0.1), 0.0);
        assert!((gamma(Factor::Z, 0.1, 0.1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn noiseless_omega_is_identity() {
        let omega = build_omega(&BitFlipModel::noiseless(1).unwrap()).unwrap();
        assert_eq!(omega.entries(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn single_qubit_omega() {
        let model = BitFlipModel::from_pairs(&[(0.1, 0.25)]).unwrap();
        let omega = build_omega(&model).unwrap();
        let f = model.qubit(0);
        assert_eq!(omega.entries(), &[1.0, 0.0, f.gamma_i(), f.gamma_z()]);
    }

    #[test]
    fn two_qubit_corner_entry() {
        let omega = build_omega(&BitFlipModel::symmetric(2, 0.1).unwrap()).unwrap();
        assert!((omega.entry(3, 3) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn omega_is_lower_triangular_with_identity_row() {
        let model = BitFlipModel::from_pairs(&[(0.1, 0.02), (0.03, 0.2), (0.07, 0.01)]).unwrap();
        let omega = build_omega(&model).unwrap();
        for row in 0..8 {
            for col in row + 1..8 {
                assert_eq!(omega.entry(row, col), 0.0);
            }
            let diag: f64 = (0..3).filter(|q| row >> q & 1 == 1).map(|q| model.qubit(q).gamma_z()).product();
            assert!((omega.entry(row, row) - diag).abs() < 1e-15);
        }
        assert_eq!(&omega.entries()[..8], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn noiseless_mitigation_is_identity() {
        let noisy = [1.0, 0.3, -0.2, 0.5];
        let out = mitigate(&noisy, &BitFlipModel::noiseless(2).unwrap()).unwrap();
        assert_eq!(out, noisy);
    }

    #[test]
    fn single_qubit_inversion() {
        let out = mitigate(&[1.0, 0.8], &BitFlipModel::symmetric(1, 0.1).unwrap()).unwrap();
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn closed_form_single_qubit() {
        // ⟨Z⟩ = (E⟨Z̃⟩ - γ(I)) / γ(Z)
        let model = BitFlipModel::from_pairs(&[(0.04, 0.11)]).unwrap();
        let f = model.qubit(0);
        for noisy in [-0.9, -0.2, 0.0, 0.37, 0.85] {
            let solved = mitigate(&[1.0, noisy], &model).unwrap()[1];
            let closed = (noisy - f.gamma_i()) / f.gamma_z();
            assert!((solved - closed).abs() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        let model = BitFlipModel::symmetric(2, 0.1).unwrap();
        assert_eq!(mitigate(&[0.9, 0.0, 0.0, 0.0], &model), Err(Error::IdentityExpectation(0.9)));
        assert!(matches!(mitigate(&[1.0, 0.0], &model), Err(Error::DimensionMismatch { .. })));
        let op = PauliZString::all_z(2).unwrap();
        assert_eq!(
            mitigate_truncated(&op, &[1.0, 0.0, 0.0, 0.0], &model, 3),
            Err(Error::TruncationOrder { order: 3, qubits: 2 })
        );
    }

    #[test]
    fn symmetric_noise_needs_no_corrections() {
        let model = BitFlipModel::from_pairs(&[(0.1, 0.1), (0.05, 0.05), (0.2, 0.2)]).unwrap();
        let noisy = [1.0, 0.3, -0.2, 0.1, 0.4, -0.3, 0.25, 0.05];
        let full = mitigate(&noisy, &model).unwrap();
        for mask in 0..8 {
            let op = PauliZString::new(3, mask).unwrap();
            let k0 = mitigate_truncated(&op, &noisy, &model, 0).unwrap();
            assert!((k0 - full[mask]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_order_equals_solve_exactly() {
        let model = BitFlipModel::from_pairs(&[(0.1, 0.02), (0.03, 0.2), (0.07, 0.01)]).unwrap();
        let noisy = [1.0, 0.3, -0.2, 0.1, 0.4, -0.3, 0.25, 0.05];
        let full = mitigate(&noisy, &model).unwrap();
        for mask in 0..8 {
            let op = PauliZString::new(3, mask).unwrap();
            assert_eq!(mitigate_truncated(&op, &noisy, &model, 3).unwrap(), full[mask]);
            assert!((mitigate_expansion(&op, &noisy, &model).unwrap() - full[mask]).abs() < 1e-12);
        }
    }

    #[test]
    fn unphysical_values_are_reported() {
        assert_eq!(unphysical(&[1.0, 1.2, -0.3, -1.01]), vec![1, 3]);
    }
}
