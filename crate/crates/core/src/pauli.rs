//! Sparse Pauli-operator algebra over a fixed qubit register.
//!
//! Operators are sums of Pauli strings with complex coefficients.  A
//! string is stored as a packed `u64` with two bits per qubit
//! (I=00, X=01, Y=10, Z=11; qubit 0 in the lowest bits), which doubles
//! as the deterministic ordering key.  For phase arithmetic and for
//! applying strings to states the packed form converts to symplectic
//! bitmasks `x` and `z` (Y sets both), with the convention
//!
//! ```text
//! P(x, z) = i^{|x & z|} · X^x · Z^z
//! P(x, z) |b> = i^{|x & z|} · (-1)^{|b & z|} |b xor x>
//! ```
//!
//! where `|m|` counts set bits.  This makes every string Hermitian and
//! gives the product rule used by `PauliSum::mul`.
//!
//! Fermionic operators map onto qubits by the Jordan-Wigner transform
//! with parity strings on the qubits *below* the acted-on index, so
//! qubit `q` holds the occupation of spin orbital `q`.  The "bare"
//! ladder operators drop the parity strings; they generate the cheaper
//! qubit-space ansatz circuits while energies keep using the encoded
//! Hamiltonian.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{CqeError, Result};
use crate::integrals::MolecularIntegrals;

/// Coefficients with magnitude below this are dropped by `simplify`.
pub const COEFF_PRUNE_THRESHOLD: f64 = 1e-14;

/// Whether ansatz generators carry Jordan-Wigner parity strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Full Jordan-Wigner strings; circuits act on fermionic states.
    Fermionic,
    /// Parity strings dropped from the ansatz generators.
    Unencoded,
}

impl std::str::FromStr for Encoding {
    type Err = CqeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fermionic" => Ok(Encoding::Fermionic),
            "unencoded" => Ok(Encoding::Unencoded),
            other => Err(CqeError::Invalid(format!(
                "unknown encoding `{other}` (expected fermionic or unencoded)"
            ))),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Fermionic => write!(f, "fermionic"),
            Encoding::Unencoded => write!(f, "unencoded"),
        }
    }
}

const EVEN_BITS: u64 = 0x5555_5555_5555_5555;

/// Packs the low 32 bits of `v` into every other bit position.
fn spread_bits(mut v: u64) -> u64 {
    v &= 0x0000_0000_ffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    v = (v | (v << 1)) & EVEN_BITS;
    v
}

/// Gathers the even-position bits of `v` into the low 32 bits.
fn compress_bits(mut v: u64) -> u64 {
    v &= EVEN_BITS;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v >> 4)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v >> 8)) & 0x0000_ffff_0000_ffff;
    v = (v | (v >> 16)) & 0x0000_0000_ffff_ffff;
    v
}

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// A single Pauli string in both packed and symplectic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliString {
    /// Packed two-bit letters; also the map ordering key.
    pub code: u64,
    /// Bit q set when qubit q carries X or Y.
    pub x: u64,
    /// Bit q set when qubit q carries Z or Y.
    pub z: u64,
}

impl PauliString {
    pub fn from_code(code: u64) -> Self {
        let lo = compress_bits(code);
        let hi = compress_bits(code >> 1);
        Self {
            code,
            x: lo ^ hi,
            z: hi,
        }
    }

    pub fn from_xz(x: u64, z: u64) -> Self {
        let code = spread_bits(x ^ z) | (spread_bits(z) << 1);
        Self { code, x, z }
    }

    pub fn identity() -> Self {
        Self { code: 0, x: 0, z: 0 }
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// True when the two strings commute as operators.
    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Applies the string to a computational basis state, returning the
    /// image bitmask and the unit-modulus phase factor.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        let k = ((self.x & self.z).count_ones() + 2 * (b & self.z).count_ones()) % 4;
        (b ^ self.x, I_POWERS[k as usize])
    }

    /// Letter at `qubit` as one of 'I', 'X', 'Y', 'Z'.
    pub fn letter(&self, qubit: usize) -> char {
        match (self.code >> (2 * qubit)) & 0b11 {
            0 => 'I',
            1 => 'X',
            2 => 'Y',
            _ => 'Z',
        }
    }
}

/// A linear combination of Pauli strings with deterministic term order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<u64, Complex64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits <= 32, "at most 32 qubits are supported");
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: Complex64) -> Self {
        let mut sum = Self::new(n_qubits);
        sum.add_term(0, coeff);
        sum
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulates `coeff` onto the string with the given packed code.
    pub fn add_term(&mut self, code: u64, coeff: Complex64) {
        *self.terms.entry(code).or_insert(Complex64::ZERO) += coeff;
    }

    pub fn coeff(&self, code: u64) -> Complex64 {
        self.terms.get(&code).copied().unwrap_or(Complex64::ZERO)
    }

    /// Terms in ascending packed-code order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        self.terms
            .iter()
            .map(|(&code, &c)| (PauliString::from_code(code), c))
    }

    /// Removes terms with negligible coefficients.
    pub fn simplify(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEFF_PRUNE_THRESHOLD);
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &PauliSum) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        for (&code, &c) in &other.terms {
            self.add_term(code, c);
        }
    }

    /// Hermitian adjoint; strings are Hermitian so only coefficients
    /// conjugate.
    pub fn adjoint(&self) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    /// Operator product, expanding the phase of every string pair.
    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = PauliSum::new(self.n_qubits);
        for (pa, ca) in self.iter() {
            for (pb, cb) in other.iter() {
                let x = pa.x ^ pb.x;
                let z = pa.z ^ pb.z;
                let ya = (pa.x & pa.z).count_ones() as i32;
                let yb = (pb.x & pb.z).count_ones() as i32;
                let yc = (x & z).count_ones() as i32;
                let anti = (pb.x & pa.z).count_ones() as i32;
                let k = (ya + yb - yc + 2 * anti).rem_euclid(4) as usize;
                let string = PauliString::from_xz(x, z);
                out.add_term(string.code, ca * cb * I_POWERS[k]);
            }
        }
        out
    }

    /// Largest coefficient magnitude, for approximate comparisons.
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes (an operator-norm upper bound).
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// True when all coefficients are real to within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// True when all coefficients are purely imaginary to within `tol`.
    pub fn is_imaginary(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (string, coeff)) in self.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", coeff.re, coeff.im)?;
            if string.code == 0 {
                write!(f, "·I")?;
            } else {
                for q in 0..self.n_qubits {
                    let letter = string.letter(q);
                    if letter != 'I' {
                        write!(f, "·{letter}{q}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Jordan-Wigner ladder operator on `qubit`: a creation (`dagger`) or
/// annihilation operator with Z parity strings on all lower qubits.
pub fn jw_ladder(n_qubits: usize, qubit: usize, dagger: bool) -> PauliSum {
    ladder(n_qubits, qubit, dagger, true)
}

/// Ladder operator without parity strings (qubit-space variant).
pub fn bare_ladder(n_qubits: usize, qubit: usize, dagger: bool) -> PauliSum {
    ladder(n_qubits, qubit, dagger, false)
}

fn ladder(n_qubits: usize, qubit: usize, dagger: bool, parity: bool) -> PauliSum {
    assert!(qubit < n_qubits);
    let chain = if parity { (1u64 << qubit) - 1 } else { 0 };
    let x_bit = 1u64 << qubit;
    let mut sum = PauliSum::new(n_qubits);
    let x_term = PauliString::from_xz(x_bit, chain);
    let y_term = PauliString::from_xz(x_bit, chain | x_bit);
    sum.add_term(x_term.code, Complex64::new(0.5, 0.0));
    let y_coeff = if dagger {
        Complex64::new(0.0, -0.5)
    } else {
        Complex64::new(0.0, 0.5)
    };
    sum.add_term(y_term.code, y_coeff);
    sum
}

/// Jordan-Wigner encoding of the molecular Hamiltonian
/// `e_core + sum h~_pq a†_p a_q + 1/2 sum <pq|rs> a†_p a†_q a_s a_r`
/// over blocked spin orbitals.
#[allow(clippy::needless_range_loop)] // indices feed the integral lookups
pub fn hamiltonian_to_pauli(m: &MolecularIntegrals) -> PauliSum {
    let n = m.n_qubits();
    let create: Vec<PauliSum> = (0..n).map(|q| jw_ladder(n, q, true)).collect();
    let destroy: Vec<PauliSum> = (0..n).map(|q| jw_ladder(n, q, false)).collect();

    let mut h = PauliSum::identity(n, Complex64::new(m.e_core(), 0.0));
    for p in 0..n {
        for q in 0..n {
            let coeff = m.one_body_so(p, q);
            if coeff.abs() < COEFF_PRUNE_THRESHOLD {
                continue;
            }
            let mut term = create[p].mul(&destroy[q]);
            term.scale(Complex64::new(coeff, 0.0));
            h.add_assign(&term);
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let pq = create[p].mul(&create[q]);
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let coeff = 0.5 * m.eri_phys_so(p, q, r, s);
                    if coeff.abs() < COEFF_PRUNE_THRESHOLD {
                        continue;
                    }
                    let mut term = pq.mul(&destroy[s].mul(&destroy[r]));
                    term.scale(Complex64::new(coeff, 0.0));
                    h.add_assign(&term);
                }
            }
        }
    }
    h.simplify();
    h
}

/// Anti-Hermitian two-body excitation generator
/// `a†_i a†_k a_l a_j - h.c.` for the given ansatz encoding.
///
/// All surviving strings have purely imaginary coefficients and
/// mutually commute, so the exponential of the generator factors
/// exactly into single-string exponentials.
pub fn excitation_generator(
    n_qubits: usize,
    i: usize,
    k: usize,
    j: usize,
    l: usize,
    encoding: Encoding,
) -> PauliSum {
    let ladder = |q: usize, dagger: bool| match encoding {
        Encoding::Fermionic => jw_ladder(n_qubits, q, dagger),
        Encoding::Unencoded => bare_ladder(n_qubits, q, dagger),
    };
    let gamma = ladder(i, true)
        .mul(&ladder(k, true))
        .mul(&ladder(l, false))
        .mul(&ladder(j, false));
    let mut gen = gamma.clone();
    let mut dag = gamma.adjoint();
    dag.scale(Complex64::new(-1.0, 0.0));
    gen.add_assign(&dag);
    gen.simplify();
    gen
}
