//! Exact statevector simulation.
//!
//! States live in the full `2^n` computational basis with the bitmask
//! of a basis state equal to its amplitude index, so determinant masks
//! from `MolecularIntegrals::reference_determinant` address amplitudes
//! directly.  Operators are applied term by term from a `PauliSum`;
//! exponentials of single strings are applied in place by rotating the
//! two-dimensional invariant subspaces `{|b>, |b xor x>}`.

use num_complex::Complex64;

use crate::pauli::{PauliString, PauliSum};

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// The all-zero vector (not a valid quantum state; used as scratch).
    pub fn zeroed(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            amps: vec![Complex64::ZERO; 1 << n_qubits],
        }
    }

    /// Computational basis state for an occupation bitmask.
    pub fn from_determinant(n_qubits: usize, mask: u64) -> Self {
        assert!((mask as u128) < (1u128 << n_qubits));
        let mut state = Self::zeroed(n_qubits);
        state.amps[mask as usize] = Complex64::new(1.0, 0.0);
        state
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Writes `op|self>` into `out` (overwriting it).
    pub fn apply_sum_into(&self, op: &PauliSum, out: &mut Statevector) {
        debug_assert_eq!(self.n_qubits, op.n_qubits());
        out.amps.fill(Complex64::ZERO);
        for (string, coeff) in op.iter() {
            let head = coeff * I_POWER[((string.x & string.z).count_ones() % 4) as usize];
            let x = string.x as usize;
            let z = string.z as usize;
            for (b, amp) in self.amps.iter().enumerate() {
                if amp.re != 0.0 || amp.im != 0.0 {
                    let sign = if ((b & z).count_ones() & 1) == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    out.amps[b ^ x] += head * sign * amp;
                }
            }
        }
    }

    /// `<self|op|self>` for a Hermitian operator, returned as a real.
    pub fn expectation(&self, op: &PauliSum) -> f64 {
        let mut scratch = Statevector::zeroed(self.n_qubits);
        self.apply_sum_into(op, &mut scratch);
        self.inner(&scratch).re
    }

    /// Applies `exp(i theta P)` in place for a single Pauli string.
    pub fn apply_string_exponential(&mut self, string: &PauliString, theta: f64) {
        let (cos_t, sin_t) = (theta.cos(), theta.sin());
        let y_phase = I_POWER[((string.x & string.z).count_ones() % 4) as usize];
        let z = string.z as usize;
        if string.x == 0 {
            // Diagonal string: each amplitude picks up exp(±i theta).
            let plus = Complex64::new(cos_t, sin_t);
            let minus = Complex64::new(cos_t, -sin_t);
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= if ((b & z).count_ones() & 1) == 0 {
                    plus
                } else {
                    minus
                };
            }
            return;
        }
        let x = string.x as usize;
        let pivot = 1usize << string.x.trailing_zeros();
        let i_sin = Complex64::new(0.0, sin_t);
        for b in 0..self.amps.len() {
            if b & pivot != 0 {
                continue;
            }
            let c = b ^ x;
            let sign_b = if ((b & z).count_ones() & 1) == 0 {
                1.0
            } else {
                -1.0
            };
            let sign_c = if ((c & z).count_ones() & 1) == 0 {
                1.0
            } else {
                -1.0
            };
            let ab = self.amps[b];
            let ac = self.amps[c];
            // P|b> = ph_b |c>, P|c> = ph_c |b>.
            let ph_b = y_phase * sign_b;
            let ph_c = y_phase * sign_c;
            self.amps[b] = cos_t * ab + i_sin * ph_c * ac;
            self.amps[c] = cos_t * ac + i_sin * ph_b * ab;
        }
    }

    /// Applies `exp(t G)` in place for an anti-Hermitian generator whose
    /// strings mutually commute, factoring it exactly into single-string
    /// exponentials `exp(i (t·h_s) P_s)` where `G = sum i h_s P_s`.
    pub fn apply_generator_exponential(&mut self, gen: &PauliSum, t: f64) {
        for (string, coeff) in gen.iter() {
            debug_assert!(
                coeff.re.abs() < 1e-12,
                "generator coefficients must be imaginary"
            );
            self.apply_string_exponential(&string, t * coeff.im);
        }
    }
}

const I_POWER: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{excitation_generator, jw_ladder, Encoding};
    use num_complex::Complex64;

    fn string_sum(n: usize, x: u64, z: u64, coeff: Complex64) -> PauliSum {
        let mut sum = PauliSum::new(n);
        sum.add_term(PauliString::from_xz(x, z).code, coeff);
        sum
    }

    #[test]
    fn determinant_state_has_single_amplitude() {
        let s = Statevector::from_determinant(3, 0b101);
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amps()[0b101], Complex64::new(1.0, 0.0));
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn x_flips_and_y_adds_phase() {
        let s = Statevector::from_determinant(2, 0b00);
        let mut out = Statevector::zeroed(2);
        s.apply_sum_into(&string_sum(2, 0b01, 0, Complex64::new(1.0, 0.0)), &mut out);
        assert_eq!(out.amps()[0b01], Complex64::new(1.0, 0.0));
        s.apply_sum_into(&string_sum(2, 0b10, 0b10, Complex64::new(1.0, 0.0)), &mut out);
        assert_eq!(out.amps()[0b10], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn number_operator_expectation_counts_occupation() {
        let n_op = |q: usize| {
            let mut op = jw_ladder(4, q, true).mul(&jw_ladder(4, q, false));
            op.simplify();
            op
        };
        let s = Statevector::from_determinant(4, 0b0110);
        assert!((s.expectation(&n_op(0)) - 0.0).abs() < 1e-15);
        assert!((s.expectation(&n_op(1)) - 1.0).abs() < 1e-15);
        assert!((s.expectation(&n_op(2)) - 1.0).abs() < 1e-15);
        assert!((s.expectation(&n_op(3)) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn single_qubit_rotation_matches_closed_form() {
        let theta = 0.3125;
        let mut s = Statevector::from_determinant(1, 0);
        s.apply_string_exponential(&PauliString::from_xz(1, 0), theta);
        // exp(i theta X)|0> = cos|0> + i sin|1>.
        assert!((s.amps()[0] - Complex64::new(theta.cos(), 0.0)).norm() < 1e-15);
        assert!((s.amps()[1] - Complex64::new(0.0, theta.sin())).norm() < 1e-15);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_rotation_applies_signed_phases() {
        let theta = 0.7;
        let mut s = Statevector::zeroed(2);
        s.amps_mut()[0b00] = Complex64::new(0.6, 0.0);
        s.amps_mut()[0b10] = Complex64::new(0.8, 0.0);
        s.apply_string_exponential(&PauliString::from_xz(0, 0b10), theta);
        assert!((s.amps()[0b00] - 0.6 * Complex64::new(theta.cos(), theta.sin())).norm() < 1e-15);
        assert!((s.amps()[0b10] - 0.8 * Complex64::new(theta.cos(), -theta.sin())).norm() < 1e-15);
    }

    #[test]
    fn string_exponentials_are_unitary() {
        let mut s = Statevector::from_determinant(3, 0b011);
        for (x, z, theta) in [
            (0b101u64, 0b010u64, 0.3),
            (0b011, 0b011, -1.2),
            (0b000, 0b111, 0.9),
            (0b110, 0b001, 2.4),
        ] {
            s.apply_string_exponential(&PauliString::from_xz(x, z), theta);
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_rotation_restores_state() {
        let gen = excitation_generator(4, 2, 3, 0, 1, Encoding::Fermionic);
        let reference = Statevector::from_determinant(4, 0b0011);
        let mut s = reference.clone();
        s.apply_generator_exponential(&gen, 0.37);
        assert!((s.inner(&reference).re - 1.0).abs() > 1e-3, "state moved");
        s.apply_generator_exponential(&gen, -0.37);
        for (a, b) in s.amps().iter().zip(reference.amps()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn generator_exponential_preserves_particle_number() {
        let gen = excitation_generator(4, 2, 3, 0, 1, Encoding::Fermionic);
        let mut s = Statevector::from_determinant(4, 0b0011);
        s.apply_generator_exponential(&gen, 0.81);
        for (b, amp) in s.amps().iter().enumerate() {
            if amp.norm() > 1e-14 {
                assert_eq!(b.count_ones(), 2, "basis state {b:b}");
            }
        }
    }
}
