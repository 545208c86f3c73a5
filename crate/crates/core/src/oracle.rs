//! Independent reference computations used to validate the solver.
//!
//! Everything here deliberately avoids the fast paths in
//! `statevector` and `optimize`: the ground state comes from a dense
//! symmetric eigensolve restricted to the particle-number sector, and
//! operator exponentials come from a scaled Taylor series.  Tests
//! compare the production code against these slower routes, and the
//! solver itself uses `fci_ground_state` only for reporting the energy
//! gap to the exact answer.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CqeError, Result};
use crate::integrals::MolecularIntegrals;
use crate::pauli::PauliSum;
use crate::statevector::Statevector;

/// All determinant bitmasks with the given alpha and beta occupation
/// counts, ascending.  Alpha spin orbitals are qubits `0..norb`, beta
/// are `norb..2*norb`.
pub fn sector_basis(norb: usize, n_alpha: usize, n_beta: usize) -> Vec<u64> {
    let n = 2 * norb;
    let alpha_mask = (1u64 << norb) - 1;
    let beta_mask = alpha_mask << norb;
    (0..1u64 << n)
        .filter(|b| {
            (b & alpha_mask).count_ones() as usize == n_alpha
                && (b & beta_mask).count_ones() as usize == n_beta
        })
        .collect()
}

/// Dense matrix of `op` restricted to the span of `basis` states.
///
/// Off-sector matrix elements of individual strings are discarded; for
/// a sector-conserving operator the restriction is exact.
pub fn sector_matrix(op: &PauliSum, basis: &[u64]) -> DMatrix<f64> {
    let dim = basis.len();
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for (col, &b) in basis.iter().enumerate() {
        for (string, coeff) in op.iter() {
            let (image, phase) = string.apply_to_basis(b);
            if let Ok(row) = basis.binary_search(&image) {
                let value = coeff * phase;
                debug_assert!(value.im.abs() < 1e-12, "sector matrix must be real");
                mat[(row, col)] += value.re;
            }
        }
    }
    // Kill round-off asymmetry so the symmetric eigensolver is exact
    // about what it diagonalizes.
    let transposed = mat.transpose();
    (mat + transposed) * 0.5
}

/// Exact ground state of the Hamiltonian in the particle-number sector
/// of the reference determinant.  Returns the energy and the state
/// embedded in the full register, with a deterministic global sign.
pub fn fci_ground_state(m: &MolecularIntegrals, hamiltonian: &PauliSum) -> Result<(f64, Statevector)> {
    let basis = sector_basis(m.norb(), m.n_alpha(), m.n_beta());
    if basis.is_empty() {
        return Err(CqeError::Invalid("empty particle-number sector".into()));
    }
    let mat = sector_matrix(hamiltonian, &basis);
    let eig = mat.symmetric_eigen();
    let mut ground = 0;
    for idx in 1..basis.len() {
        if eig.eigenvalues[idx] < eig.eigenvalues[ground] {
            ground = idx;
        }
    }
    let energy = eig.eigenvalues[ground];
    let column = eig.eigenvectors.column(ground);
    let flip = column
        .iter()
        .find(|v| v.abs() > 1e-8)
        .map_or(1.0, |v| v.signum());
    let mut state = Statevector::zeroed(m.n_qubits());
    for (idx, &b) in basis.iter().enumerate() {
        state.amps_mut()[b as usize] = Complex64::new(flip * column[idx], 0.0);
    }
    Ok((energy, state))
}

/// Convenience wrapper returning only the ground-state energy.
pub fn fci_energy(m: &MolecularIntegrals, hamiltonian: &PauliSum) -> Result<f64> {
    fci_ground_state(m, hamiltonian).map(|(e, _)| e)
}

/// `exp(op)|state>` by scaling-and-squaring with a Taylor series.
///
/// Works for any operator; used as the reference for the factored
/// exponentials in `Statevector::apply_generator_exponential`.
pub fn taylor_exponential(op: &PauliSum, state: &Statevector) -> Statevector {
    let norm = op.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let mut scaled = op.clone();
    scaled.scale(Complex64::new(1.0 / f64::from(1u32 << squarings), 0.0));

    let mut result = state.clone();
    for _ in 0..1u64 << squarings {
        let mut acc = result.clone();
        let mut term = result.clone();
        let mut scratch = Statevector::zeroed(state.n_qubits());
        for k in 1..200 {
            term.apply_sum_into(&scaled, &mut scratch);
            std::mem::swap(&mut term, &mut scratch);
            let inv_k = 1.0 / k as f64;
            for amp in term.amps_mut() {
                *amp *= inv_k;
            }
            for (a, t) in acc.amps_mut().iter_mut().zip(term.amps()) {
                *a += t;
            }
            if term.norm() < 1e-18 {
                break;
            }
        }
        result = acc;
    }
    result
}

/// Central-difference derivative of the energy along `exp(t·gen)` at
/// `t = 0`, using the Taylor exponential.
pub fn finite_difference_gradient(
    hamiltonian: &PauliSum,
    gen: &PauliSum,
    state: &Statevector,
    step: f64,
) -> f64 {
    let energy_at = |t: f64| {
        let mut scaled = gen.clone();
        scaled.scale(Complex64::new(t, 0.0));
        taylor_exponential(&scaled, state).expectation(hamiltonian)
    };
    (energy_at(step) - energy_at(-step)) / (2.0 * step)
}
