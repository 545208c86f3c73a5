//! Excitation pool and residual measurement.
//!
//! The solver steps along anti-Hermitian two-body generators
//! `G_e = a†_i a†_k a_l a_j - h.c.` drawn from a fixed pool of
//! spin-conserving index quadruples.  The residual vector collects
//! `A_e = <psi|[H, G_e]|psi>`, which is simultaneously the stationarity
//! condition being driven to zero and the exact gradient of the energy
//! with respect to a step `exp(t G_e)` at `t = 0` — that identity is
//! what lets quasi-Newton machinery run on measured residuals alone.
//!
//! Pool layout: spatial-orbital pairs are enumerated per spin sector
//! (alpha-alpha, beta-beta, then alpha-beta) and an element pairs a
//! higher-ranked "upper" pair (created) with a lower-ranked "lower"
//! pair (annihilated), so each unordered pair of pairs appears exactly
//! once.  The ordering is deterministic and position in the pool is the
//! coordinate used by the optimizers.

use num_complex::Complex64;

use crate::error::{CqeError, Result};
use crate::integrals::MolecularIntegrals;
use crate::pauli::{excitation_generator, Encoding, PauliSum};
use crate::statevector::Statevector;

/// Residual components above this imaginary magnitude abort the run.
pub const RESIDUAL_IMAG_TOLERANCE: f64 = 1e-10;

/// One pool entry: `upper = (i, k)` created, `lower = (j, l)`
/// annihilated, all blocked spin-orbital indices with `i < k`, `j < l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolElement {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    pub l: usize,
}

impl PoolElement {
    /// The generator `a†_i a†_k a_l a_j - h.c.` for this element.
    pub fn generator(&self, n_qubits: usize, encoding: Encoding) -> PauliSum {
        excitation_generator(n_qubits, self.i, self.k, self.j, self.l, encoding)
    }
}

/// Closed-form pool size: two same-spin sectors of `C(C(m,2), 2)`
/// elements plus the mixed-spin sector of `C(m^2, 2)`.
pub fn pool_size(norb: usize) -> usize {
    let choose2 = |n: usize| n * n.saturating_sub(1) / 2;
    2 * choose2(choose2(norb)) + choose2(norb * norb)
}

/// Builds the full spin-conserving two-body excitation pool.
pub fn build_pool(norb: usize) -> Vec<PoolElement> {
    let mut pool = Vec::with_capacity(pool_size(norb));
    let same_spin_pairs = |offset: usize| -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for a in 0..norb {
            for b in a + 1..norb {
                pairs.push((offset + a, offset + b));
            }
        }
        pairs
    };
    let mut mixed_pairs = Vec::new();
    for a in 0..norb {
        for b in 0..norb {
            mixed_pairs.push((a, norb + b));
        }
    }
    for pairs in [
        same_spin_pairs(0),
        same_spin_pairs(norb),
        mixed_pairs,
    ] {
        for upper in 1..pairs.len() {
            for lower in 0..upper {
                let (i, k) = pairs[upper];
                let (j, l) = pairs[lower];
                pool.push(PoolElement { i, k, j, l });
            }
        }
    }
    debug_assert_eq!(pool.len(), pool_size(norb));
    pool
}

/// Generators for every pool element in pool order.
pub fn pool_generators(pool: &[PoolElement], n_qubits: usize, encoding: Encoding) -> Vec<PauliSum> {
    pool.iter()
        .map(|e| e.generator(n_qubits, encoding))
        .collect()
}

/// Measures the residual vector `A_e = <psi|[H, G_e]|psi>` given
/// `h_psi = H|psi>`.  Each component must come out real; a significant
/// imaginary part is reported as an error rather than silently dropped.
pub fn residual_vector(
    psi: &Statevector,
    h_psi: &Statevector,
    generators: &[PauliSum],
) -> Result<Vec<f64>> {
    let mut scratch = Statevector::zeroed(psi.n_qubits());
    let mut out = Vec::with_capacity(generators.len());
    for (index, gen) in generators.iter().enumerate() {
        // <psi|HG|psi> - <psi|GH|psi> with H applied once up front.
        psi.apply_sum_into(gen, &mut scratch);
        let hg = h_psi.inner(&scratch);
        h_psi.apply_sum_into(gen, &mut scratch);
        let gh = psi.inner(&scratch);
        let value = hg - gh;
        if value.im.abs() > RESIDUAL_IMAG_TOLERANCE {
            return Err(CqeError::ComplexResidual {
                index,
                imag: value.im,
            });
        }
        out.push(value.re);
    }
    Ok(out)
}

/// Euclidean norm of a residual (or any coefficient) vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One- and two-particle reduced density matrices over spin orbitals.
pub struct Rdms {
    n_so: usize,
    /// `<a†_p a_q>` at `p·n + q`.
    pub one: Vec<f64>,
    /// `<a†_p a†_q a_s a_r>` at `((p·n + q)·n + r)·n + s`.
    pub two: Vec<f64>,
}

impl Rdms {
    pub fn one_body(&self, p: usize, q: usize) -> f64 {
        self.one[p * self.n_so + q]
    }

    pub fn two_body(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_so;
        self.two[((p * n + q) * n + r) * n + s]
    }
}

/// Sign for removing index `q` from determinant `b` (parity of the
/// occupied spin orbitals below `q`).
#[inline]
fn removal_sign(b: u64, q: usize) -> f64 {
    if (b & ((1u64 << q) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Measures `<a†_p a_q>` and `<a†_p a†_q a_s a_r>` on a state by direct
/// determinant bookkeeping (no Pauli expansion involved).
pub fn measure_rdms(psi: &Statevector) -> Rdms {
    let n = psi.n_qubits();
    let mut one = vec![0.0; n * n];
    let mut two = vec![0.0; n * n * n * n];
    let mut one_c = vec![Complex64::ZERO; n * n];
    let mut two_c = vec![Complex64::ZERO; n * n * n * n];

    for (b_idx, amp) in psi.amps().iter().enumerate() {
        if amp.norm_sqr() < 1e-30 {
            continue;
        }
        let b = b_idx as u64;
        // One-body: annihilate q, create p.
        for q in 0..n {
            if b & (1 << q) == 0 {
                continue;
            }
            let sq = removal_sign(b, q);
            let b1 = b & !(1u64 << q);
            for p in 0..n {
                if b1 & (1 << p) != 0 {
                    continue;
                }
                let sp = removal_sign(b1, p);
                let target = (b1 | (1 << p)) as usize;
                one_c[p * n + q] += psi.amps()[target].conj() * amp * (sq * sp);
            }
        }
        // Two-body: annihilate r then s, create q then p.
        for r in 0..n {
            if b & (1 << r) == 0 {
                continue;
            }
            let sr = removal_sign(b, r);
            let b1 = b & !(1u64 << r);
            for s in 0..n {
                if b1 & (1 << s) == 0 {
                    continue;
                }
                let ss = removal_sign(b1, s);
                let b2 = b1 & !(1u64 << s);
                for q in 0..n {
                    if b2 & (1 << q) != 0 {
                        continue;
                    }
                    let sign_q = removal_sign(b2, q);
                    let b3 = b2 | (1u64 << q);
                    for p in 0..n {
                        if b3 & (1 << p) != 0 {
                            continue;
                        }
                        let sign_p = removal_sign(b3, p);
                        let target = (b3 | (1 << p)) as usize;
                        let sign = sr * ss * sign_q * sign_p;
                        two_c[((p * n + q) * n + r) * n + s] +=
                            psi.amps()[target].conj() * amp * sign;
                    }
                }
            }
        }
    }
    for (dst, src) in one.iter_mut().zip(&one_c) {
        debug_assert!(src.im.abs() < 1e-10);
        *dst = src.re;
    }
    for (dst, src) in two.iter_mut().zip(&two_c) {
        debug_assert!(src.im.abs() < 1e-10);
        *dst = src.re;
    }
    Rdms { n_so: n, one, two }
}

/// Contracts the integrals with measured density matrices:
/// `E = e_core + sum h~·D1 + 1/2 sum <pq|rs>·D2`.
pub fn energy_from_rdms(m: &MolecularIntegrals, rdms: &Rdms) -> f64 {
    let n = m.n_qubits();
    let mut energy = m.e_core();
    for p in 0..n {
        for q in 0..n {
            let h = m.one_body_so(p, q);
            if h != 0.0 {
                energy += h * rdms.one_body(p, q);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = m.eri_phys_so(p, q, r, s);
                    if v != 0.0 {
                        energy += 0.5 * v * rdms.two_body(p, q, r, s);
                    }
                }
            }
        }
    }
    energy
}
