//! Python bindings for the contracted-equation ground-state solver.
//!
//! The module mirrors the library's main entry points: load a problem
//! from an FCIDUMP file (`Molecule`), run the iterative solver
//! (`run`), and inspect the outcome (`RunOutcome` / `Step`).  Exact
//! sector diagonalization is exposed as `Molecule.fci_energy` so
//! results can be checked against the true ground state.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cqe_core::ansatz::SparsityCriterion;
use cqe_core::optimize::{run_cqe, OptimizerKind, RunConfig};
use cqe_core::pauli::{hamiltonian_to_pauli, Encoding};
use cqe_core::{oracle, residual, CqeError, MolecularIntegrals};

fn to_py_err(e: CqeError) -> PyErr {
    match e {
        CqeError::Io(io) => PyIOError::new_err(io.to_string()),
        CqeError::Parse { .. } | CqeError::Invalid(_) => PyValueError::new_err(e.to_string()),
        CqeError::ComplexResidual { .. } | CqeError::Numerical(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
    }
}

/// Molecular problem data: integrals plus electron bookkeeping.
#[pyclass(module = "cqe_py")]
struct Molecule {
    inner: MolecularIntegrals,
}

#[pymethods]
impl Molecule {
    /// Reads a problem from an FCIDUMP file.
    #[staticmethod]
    fn load_fcidump(path: &str) -> PyResult<Self> {
        let inner = MolecularIntegrals::load_fcidump(path).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Parses a problem from FCIDUMP text.
    #[staticmethod]
    fn from_fcidump_str(text: &str) -> PyResult<Self> {
        let inner = MolecularIntegrals::from_fcidump_str(text).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Number of spatial orbitals.
    #[getter]
    fn norb(&self) -> usize {
        self.inner.norb()
    }

    /// Total electron count.
    #[getter]
    fn nelec(&self) -> usize {
        self.inner.nelec()
    }

    #[getter]
    fn n_alpha(&self) -> usize {
        self.inner.n_alpha()
    }

    #[getter]
    fn n_beta(&self) -> usize {
        self.inner.n_beta()
    }

    /// Qubits needed for the spin-orbital encoding (2 x norb).
    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// Constant (nuclear-repulsion) energy shift.
    #[getter]
    fn e_core(&self) -> f64 {
        self.inner.e_core()
    }

    /// Exact ground-state energy in the particle/spin sector,
    /// from dense diagonalization of the sector Hamiltonian.
    fn fci_energy(&self) -> PyResult<f64> {
        let h = hamiltonian_to_pauli(&self.inner);
        oracle::fci_energy(&self.inner, &h).map_err(to_py_err)
    }

    /// Size of the two-body residual pool for this orbital count.
    fn pool_size(&self) -> usize {
        residual::pool_size(self.inner.norb())
    }

    fn __repr__(&self) -> String {
        format!(
            "Molecule(norb={}, nelec={}, ms2={})",
            self.inner.norb(),
            self.inner.nelec(),
            self.inner.ms2()
        )
    }
}

/// One iteration of a solver run.
#[pyclass(module = "cqe_py", skip_from_py_object)]
#[derive(Clone, Debug)]
struct Step {
    #[pyo3(get)]
    iteration: usize,
    /// Energy after the step was applied.
    #[pyo3(get)]
    energy: f64,
    /// Residual norm that drove the step (measured before it).
    #[pyo3(get)]
    grad_norm: f64,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    n_layers: usize,
    #[pyo3(get)]
    n_terms: usize,
    #[pyo3(get)]
    cnot_circuit: usize,
    #[pyo3(get)]
    cnot_cumulative: u64,
    #[pyo3(get)]
    line_search_evals: usize,
}

#[pymethods]
impl Step {
    fn __repr__(&self) -> String {
        format!(
            "Step(iteration={}, energy={:.10}, grad_norm={:.5e}, alpha={:.6})",
            self.iteration, self.energy, self.grad_norm, self.alpha
        )
    }
}

/// Outcome of a solver run.
#[pyclass(module = "cqe_py")]
#[derive(Debug)]
struct RunOutcome {
    /// "converged", "max_iterations", "line_search_failed", or "stalled".
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    energy: f64,
    /// Energy of the bare reference determinant.
    #[pyo3(get)]
    reference_energy: f64,
    #[pyo3(get)]
    final_grad_norm: f64,
    #[pyo3(get)]
    pool_size: usize,
    /// Residual components measured by the per-iteration sweeps.
    #[pyo3(get)]
    residual_evaluations: u64,
    /// Two-qubit gates in the final circuit.
    #[pyo3(get)]
    cnot_circuit: usize,
    /// Two-qubit gates summed over every circuit executed.
    #[pyo3(get)]
    cnot_cumulative: u64,
    #[pyo3(get)]
    records: Vec<Step>,
}

#[pymethods]
impl RunOutcome {
    #[getter]
    fn converged(&self) -> bool {
        self.termination == "converged"
    }

    fn __repr__(&self) -> String {
        format!(
            "RunOutcome(termination='{}', iterations={}, energy={:.10})",
            self.termination, self.iterations, self.energy
        )
    }
}

fn parse_with<T: std::str::FromStr<Err = CqeError>>(value: &str) -> PyResult<T> {
    value.parse::<T>().map_err(to_py_err)
}

/// Runs the iterative solver on a molecule.
///
/// Keyword arguments mirror the CLI flags; omitted ones take the same
/// defaults (BFGS, threshold 1e-5, 300 iterations, no sparsification).
#[pyfunction]
#[pyo3(signature = (
    molecule,
    *,
    optimizer = "bfgs",
    encoding = "fermionic",
    threshold = 1e-5,
    max_iter = 300,
    p_depth = 0,
    sparsity_c = 0.0,
    criterion = "abs",
    include_window = false,
    alpha_fixed = 0.5,
    alpha_max = 1.0,
    lbfgs_memory = 3,
    wolfe_c1 = 1e-4,
    wolfe_c2 = None,
))]
#[allow(clippy::too_many_arguments)]
fn run(
    molecule: &Molecule,
    optimizer: &str,
    encoding: &str,
    threshold: f64,
    max_iter: usize,
    p_depth: usize,
    sparsity_c: f64,
    criterion: &str,
    include_window: bool,
    alpha_fixed: f64,
    alpha_max: f64,
    lbfgs_memory: usize,
    wolfe_c1: f64,
    wolfe_c2: Option<f64>,
) -> PyResult<RunOutcome> {
    let config = RunConfig {
        optimizer: parse_with::<OptimizerKind>(optimizer)?,
        encoding: parse_with::<Encoding>(encoding)?,
        threshold,
        max_iterations: max_iter,
        p_depth,
        sparsity_c,
        criterion: parse_with::<SparsityCriterion>(criterion)?,
        include_window,
        alpha_fixed,
        alpha_max,
        lbfgs_memory,
        wolfe_c1,
        wolfe_c2,
    };
    let result = run_cqe(&molecule.inner, &config).map_err(to_py_err)?;
    Ok(RunOutcome {
        termination: result.termination.to_string(),
        iterations: result.iterations,
        energy: result.energy,
        reference_energy: result.reference_energy,
        final_grad_norm: result.final_grad_norm,
        pool_size: result.pool_size,
        residual_evaluations: result.residual_evaluations,
        cnot_circuit: result.cnot_circuit,
        cnot_cumulative: result.cnot_cumulative,
        records: result
            .records
            .iter()
            .map(|r| Step {
                iteration: r.iteration,
                energy: r.energy,
                grad_norm: r.grad_norm,
                alpha: r.alpha,
                n_layers: r.n_layers,
                n_terms: r.n_terms,
                cnot_circuit: r.cnot_circuit,
                cnot_cumulative: r.cnot_cumulative,
                line_search_evals: r.line_search_evals,
            })
            .collect(),
    })
}

/// Residual-pool size for a given spatial-orbital count.
#[pyfunction]
fn pool_size(norb: usize) -> usize {
    residual::pool_size(norb)
}

#[pymodule]
fn cqe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Molecule>()?;
    m.add_class::<RunOutcome>()?;
    m.add_class::<Step>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(pool_size, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::exceptions::PyValueError;

    fn h2() -> Molecule {
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/h2_0.7414.fcidump"
        );
        Molecule::load_fcidump(path).unwrap()
    }

    #[test]
    fn default_run_reaches_the_sector_ground_state() {
        let mol = h2();
        assert_eq!(mol.norb(), 2);
        assert_eq!(mol.n_qubits(), 4);
        assert_eq!(mol.pool_size(), 6);
        let fci = mol.fci_energy().unwrap();
        let out = run(
            &mol,
            "bfgs",
            "fermionic",
            1e-5,
            300,
            0,
            0.0,
            "abs",
            false,
            0.5,
            1.0,
            3,
            1e-4,
            None,
        )
        .unwrap();
        assert_eq!(out.termination, "converged");
        assert!(out.converged());
        assert!((out.energy - fci).abs() < 1e-6);
        assert_eq!(out.records.len(), out.iterations);
        assert_eq!(
            out.records.last().unwrap().cnot_cumulative,
            out.cnot_cumulative
        );
    }

    #[test]
    fn bad_names_map_to_value_errors() {
        pyo3::Python::initialize();
        let mol = h2();
        let err = run(
            &mol, "newton", "fermionic", 1e-5, 300, 0, 0.0, "abs", false, 0.5, 1.0, 3, 1e-4, None,
        )
        .unwrap_err();
        pyo3::Python::attach(|py| {
            assert!(err.is_instance_of::<PyValueError>(py));
            assert!(err.to_string().contains("newton"));
        });
    }
}
