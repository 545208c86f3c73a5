//! Randomized invariants of the measurement and optimization layers.
//!
//! Each property here is a statement that must hold for *every* valid
//! input, exercised over generated cases: density-matrix sum rules on
//! arbitrary particle-sector states, the residual-as-gradient identity
//! on arbitrary ansatz states, the algebraic contracts of the
//! quasi-Newton updates and the line search, the quadratic scaling of
//! the exponential splitting error, and the structure of the
//! excitation pool and its generators.

use num_complex::Complex64;
use proptest::prelude::*;

use cqe_core::optimize::{bfgs_update, run_cqe, strong_wolfe_search, RunConfig};
use cqe_core::oracle::{finite_difference_gradient, sector_basis, taylor_exponential};
use cqe_core::pauli::{hamiltonian_to_pauli, Encoding};
use cqe_core::residual::{
    build_pool, energy_from_rdms, measure_rdms, pool_generators, pool_size, residual_vector,
};
use cqe_core::{MolecularIntegrals, Statevector, Termination};
use nalgebra::{DMatrix, DVector};

fn h2() -> MolecularIntegrals {
    let path = format!("{}/../../data/h2_0.7414.fcidump", env!("CARGO_MANIFEST_DIR"));
    MolecularIntegrals::load_fcidump(&path).expect("data file loads")
}

/// Random normalized real state supported on one (n_alpha, n_beta)
/// sector.  The solver only ever visits real states (real reference,
/// real generator exponentials), and the density-matrix measurement
/// relies on that.
fn sector_state(norb: usize, na: usize, nb: usize, raw: &[f64]) -> Option<Statevector> {
    let basis = sector_basis(norb, na, nb);
    let mut psi = Statevector::zeroed(2 * norb);
    for (mask, &re) in basis.iter().zip(raw.iter().cycle()) {
        psi.amps_mut()[*mask as usize] = Complex64::new(re, 0.0);
    }
    let norm = psi.norm();
    if norm < 1e-3 {
        return None;
    }
    let inv = Complex64::new(1.0 / norm, 0.0);
    for a in psi.amps_mut() {
        *a *= inv;
    }
    Some(psi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Reduced density matrices of any sector state obey the fermionic
    /// sum rules: hermiticity, antisymmetry, the particle-number
    /// traces, and the contraction of the pair matrix onto the
    /// one-body matrix.
    #[test]
    fn rdm_sum_rules_hold_on_sector_states(
        raw in proptest::collection::vec(-1.0f64..1.0, 9),
        which in 0usize..3,
    ) {
        let (norb, na, nb) = [(2, 1, 1), (3, 2, 1), (2, 2, 1)][which];
        let Some(psi) = sector_state(norb, na, nb, &raw) else {
            return Ok(());
        };
        let n_so = 2 * norb;
        let n = (na + nb) as f64;
        let rdms = measure_rdms(&psi);

        let mut trace1 = 0.0;
        for p in 0..n_so {
            trace1 += rdms.one_body(p, p);
            for q in 0..n_so {
                prop_assert!((rdms.one_body(p, q) - rdms.one_body(q, p)).abs() < 1e-12);
            }
        }
        prop_assert!((trace1 - n).abs() < 1e-10, "tr D1 = {trace1} vs N = {n}");

        let mut trace2 = 0.0;
        for p in 0..n_so {
            for q in 0..n_so {
                trace2 += rdms.two_body(p, q, p, q);
                for r in 0..n_so {
                    // Contracting one index pair recovers the one-body
                    // matrix scaled by N - 1.
                    let contracted: f64 =
                        (0..n_so).map(|s| rdms.two_body(p, s, r, s)).sum();
                    prop_assert!(
                        (contracted - (n - 1.0) * rdms.one_body(p, r)).abs() < 1e-10
                    );
                    for s in 0..n_so {
                        let v = rdms.two_body(p, q, r, s);
                        prop_assert!((v + rdms.two_body(q, p, r, s)).abs() < 1e-12);
                        prop_assert!((v + rdms.two_body(p, q, s, r)).abs() < 1e-12);
                        // Hermiticity of the pair matrix (real state
                        // conventions keep it real symmetric).
                        prop_assert!((v - rdms.two_body(r, s, p, q)).abs() < 1e-12);
                    }
                }
            }
        }
        prop_assert!((trace2 - n * (n - 1.0)).abs() < 1e-10);
    }

    /// The residual component for a generator equals the derivative of
    /// the energy along that generator's exponential, measured by
    /// central differences, on arbitrary product-ansatz states; and the
    /// density-matrix contraction of the integrals reproduces the
    /// statevector energy on the same states.
    #[test]
    fn residual_components_equal_energy_derivatives(
        layers in proptest::collection::vec((0usize..6, -0.6f64..0.6), 1..4),
    ) {
        let m = h2();
        let h = hamiltonian_to_pauli(&m);
        let gens = pool_generators(&build_pool(m.norb()), m.n_qubits(), Encoding::Fermionic);
        let mut psi = Statevector::from_determinant(m.n_qubits(), m.reference_determinant());
        for &(e, theta) in &layers {
            psi.apply_generator_exponential(&gens[e], theta);
        }
        let mut h_psi = Statevector::zeroed(m.n_qubits());
        psi.apply_sum_into(&h, &mut h_psi);
        let energy = psi.inner(&h_psi).re;
        let from_rdms = energy_from_rdms(&m, &measure_rdms(&psi));
        prop_assert!(
            (from_rdms - energy).abs() < 1e-10,
            "density-matrix energy {from_rdms} vs statevector {energy}"
        );
        let residual = residual_vector(&psi, &h_psi, &gens).unwrap();
        for (gen, &a) in gens.iter().zip(&residual) {
            let fd = finite_difference_gradient(&h, gen, &psi, 1e-4);
            prop_assert!(
                (fd - a).abs() < 1e-6,
                "residual {a} vs finite difference {fd}"
            );
        }
    }

    /// Starting from the identity, every admissible BFGS update keeps
    /// the inverse Hessian symmetric positive definite and satisfies
    /// the secant equation for the pair it absorbed.
    #[test]
    fn bfgs_chain_stays_spd_and_secant(
        pairs in proptest::collection::vec(
            (
                proptest::collection::vec(-1.0f64..1.0, 4),
                proptest::collection::vec(-1.0f64..1.0, 4),
            ),
            1..4,
        ),
        probe in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mut h = DMatrix::<f64>::identity(4, 4);
        for (s_raw, y_raw) in pairs {
            let s = DVector::from_vec(s_raw);
            let mut y = DVector::from_vec(y_raw);
            if s.dot(&y) <= 0.1 {
                // Bend toward positive curvature so the update applies.
                y += &s * (0.5 + s.dot(&y).abs() / s.dot(&s).max(1e-9));
            }
            if !bfgs_update(&mut h, &s, &y) {
                continue;
            }
            let secant = (&h * &y - &s).norm();
            prop_assert!(secant < 1e-9 * s.norm().max(1.0), "secant residual {secant}");
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((h[(i, j)] - h[(j, i)]).abs() < 1e-10);
                }
            }
        }
        let v = DVector::from_vec(probe);
        if v.norm() > 1e-6 {
            let quad = v.dot(&(&h * &v));
            prop_assert!(quad > 0.0, "inverse Hessian lost positive definiteness: {quad}");
        }
    }

    /// On smooth convex one-dimensional objectives the line search
    /// always returns a point satisfying both strong Wolfe conditions.
    #[test]
    fn wolfe_search_contract_on_convex_objectives(
        k in 0.2f64..50.0,
        minimum in 0.05f64..4.0,
        quartic in 0.0f64..5.0,
        alpha0 in 0.1f64..1.5,
        tight in proptest::bool::ANY,
    ) {
        let phi = |a: f64| k * (a - minimum).powi(2) + quartic * a.powi(4);
        let dphi = |a: f64| 2.0 * k * (a - minimum) + 4.0 * quartic * a.powi(3);
        let (c1, c2) = (1e-4, if tight { 0.1 } else { 0.9 });
        let result = strong_wolfe_search(
            |a| Ok((phi(a), dphi(a), ())),
            phi(0.0),
            dphi(0.0),
            alpha0,
            c1,
            c2,
            20,
        )
        .unwrap();
        let (alpha, evals, ()) = result.expect("a Wolfe point exists on a convex objective");
        prop_assert!(evals <= 20);
        prop_assert!(phi(alpha) <= phi(0.0) + c1 * alpha * dphi(0.0) + 1e-12);
        prop_assert!(dphi(alpha).abs() <= -c2 * dphi(0.0) + 1e-12);
    }

    /// Splitting the exponential of a sum of two non-commuting
    /// generators into a product incurs an error that shrinks
    /// quadratically with the step size.
    #[test]
    fn splitting_error_is_second_order(
        a_idx in 0usize..6,
        b_idx in 0usize..6,
        layers in proptest::collection::vec((0usize..6, -0.4f64..0.4), 0..2),
    ) {
        let m = h2();
        let gens = pool_generators(&build_pool(m.norb()), m.n_qubits(), Encoding::Fermionic);
        let mut psi = Statevector::from_determinant(m.n_qubits(), m.reference_determinant());
        for &(e, theta) in &layers {
            psi.apply_generator_exponential(&gens[e], theta);
        }
        let error_at = |s: f64| -> f64 {
            let mut sum = gens[a_idx].clone();
            sum.add_assign(&gens[b_idx]);
            sum.scale(Complex64::new(s, 0.0));
            let exact = taylor_exponential(&sum, &psi);
            let mut split = psi.clone();
            split.apply_generator_exponential(&gens[a_idx], s);
            split.apply_generator_exponential(&gens[b_idx], s);
            let mut diff = 0.0;
            for (x, y) in exact.amps().iter().zip(split.amps()) {
                diff += (x - y).norm_sqr();
            }
            diff.sqrt()
        };
        // Commuting pairs split exactly; only a resolvable error pins
        // down the scaling exponent.  Halving the step must shrink the
        // error about quadratically: the ratio sits near 4 with a
        // tolerance for the next-order correction (which scales with
        // the base step, hence the small step here), and states where
        // the leading commutator term vanishes shrink even faster,
        // which the bound allows.  A designed-state unit test pins the
        // generic ratio tightly at 4.
        let (e1, e2) = (error_at(0.08), error_at(0.04));
        if e1 > 1e-9 {
            let ratio = e1 / e2;
            prop_assert!(
                ratio > 3.0,
                "halving the step changed the error by only {ratio} (want about 4)"
            );
        }
    }

    /// Every encoded pool generator is anti-Hermitian and expands into
    /// at most eight Pauli strings that commute pairwise, which is what
    /// makes its exponential exactly factorizable.
    #[test]
    fn pool_generators_are_antihermitian_with_commuting_strings(
        norb in 2usize..5,
        pick in proptest::num::usize::ANY,
        fermionic in proptest::bool::ANY,
    ) {
        let pool = build_pool(norb);
        let element = pool[pick % pool.len()];
        let encoding = if fermionic { Encoding::Fermionic } else { Encoding::Unencoded };
        let gen = element.generator(2 * norb, encoding);
        prop_assert!(gen.len() <= 8, "generator has {} strings", gen.len());
        prop_assert!(!gen.is_empty());
        // G + G† = 0.
        let mut sum = gen.adjoint();
        sum.add_assign(&gen);
        prop_assert!(sum.max_coeff_norm() < 1e-14);
        let strings: Vec<_> = gen.iter().collect();
        for (i, (si, ci)) in strings.iter().enumerate() {
            prop_assert!(ci.re.abs() < 1e-15, "coefficients must be imaginary");
            if encoding == Encoding::Fermionic {
                for (sj, _) in strings.iter().skip(i + 1) {
                    prop_assert!(si.commutes_with(sj), "strings within one generator commute");
                }
            }
        }
    }
}

/// Both strong Wolfe conditions hold at every accepted step length of
/// a real solver run, checked by replaying the run's published layers
/// against freshly measured energies and residuals.
#[test]
fn wolfe_conditions_hold_at_every_accepted_step() {
    let m = h2();
    let config = RunConfig::default();
    let result = run_cqe(&m, &config).unwrap();
    assert_eq!(result.termination, Termination::Converged);
    assert!(!result.records.is_empty());

    let h = hamiltonian_to_pauli(&m);
    let gens = pool_generators(&build_pool(m.norb()), m.n_qubits(), Encoding::Fermionic);
    let mu = gens.len();
    let mut psi = Statevector::from_determinant(m.n_qubits(), m.reference_determinant());
    let mut h_psi = Statevector::zeroed(m.n_qubits());
    psi.apply_sum_into(&h, &mut h_psi);
    let mut grad = residual_vector(&psi, &h_psi, &gens).unwrap();
    let mut h_inv = DMatrix::<f64>::identity(mu, mu);
    let (c1, c2) = (config.wolfe_c1, config.effective_wolfe_c2());

    for record in &result.records {
        let energy_before = psi.inner(&h_psi).re;
        let g = DVector::from_column_slice(&grad);
        let d = -(&h_inv * &g);
        let slope0 = g.dot(&d);
        assert!(slope0 < 0.0, "accepted steps descend");

        let layer = &result.ansatz.layers()[record.iteration];
        let mut s = DVector::zeros(mu);
        for &(e, theta) in layer {
            s[e] = theta;
            psi.apply_generator_exponential(&gens[e], theta);
        }
        psi.apply_sum_into(&h, &mut h_psi);
        let next = residual_vector(&psi, &h_psi, &gens).unwrap();

        assert!(
            record.energy <= energy_before + c1 * record.alpha * slope0 + 1e-12,
            "iteration {}: sufficient decrease violated",
            record.iteration
        );
        let slope_accepted: f64 = next.iter().zip(d.iter()).map(|(r, v)| r * v).sum();
        assert!(
            slope_accepted.abs() <= -c2 * slope0 + 1e-12,
            "iteration {}: curvature condition violated",
            record.iteration
        );

        let y = DVector::from_column_slice(&next) - DVector::from_column_slice(&grad);
        bfgs_update(&mut h_inv, &s, &y);
        grad = next;
    }
}

#[test]
fn pool_size_formula_matches_enumeration_up_to_six_orbitals() {
    for norb in 2..=6 {
        let pool = build_pool(norb);
        assert_eq!(pool.len(), pool_size(norb), "norb = {norb}");
        // Every element is unique and canonically ordered within its
        // index pairs.
        for (a, e) in pool.iter().enumerate() {
            assert!(e.i < e.k && e.j < e.l);
            for other in &pool[a + 1..] {
                assert!(
                    (e.i, e.k, e.j, e.l) != (other.i, other.k, other.j, other.l),
                    "duplicate pool element at norb = {norb}"
                );
            }
        }
    }
    assert_eq!(pool_size(2), 6);
    assert_eq!(pool_size(4), 150);
    assert_eq!(pool_size(5), 390);
    assert_eq!(pool_size(6), 840);
}
