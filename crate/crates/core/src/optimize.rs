//! Iterative ground-state solver driving the residual vector to zero.
//!
//! Each iteration measures the residual `A_e = <psi|[H, G_e]|psi>` over
//! the whole excitation pool, asks an optimizer for a step direction,
//! sparsifies it, chooses a step length, and folds the resulting
//! exponentials into the ansatz.  Because the residual equals the exact
//! energy gradient with respect to appending `exp(t G_e)`, standard
//! smooth-optimization machinery (fixed-step and quadratic-fit gradient
//! descent, Fletcher-Reeves conjugate gradients, BFGS, and limited-
//! memory BFGS with strong-Wolfe line searches) runs directly on
//! measured quantities.
//!
//! Line-search slopes are the measured residual projected on the step
//! direction.  With layer merging active this is the method's defining
//! approximation: the true derivative of a coefficient buried inside
//! the circuit differs at second order in the layer coefficients.
//!
//! State preparation is incremental: per-layer checkpoint states are
//! kept, and a trial step recomputes only from the earliest layer it
//! modifies.  The result is bitwise identical to preparing from
//! scratch, so runs are deterministic.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::ansatz::{generator_cnot_cost, sparsify, Ansatz, SparsityCriterion};
use crate::error::{CqeError, Result};
use crate::integrals::MolecularIntegrals;
use crate::pauli::{hamiltonian_to_pauli, Encoding, PauliSum};
use crate::residual::{build_pool, norm2, pool_generators, residual_vector};
use crate::statevector::Statevector;

/// Curvature pairs with `y·s` at or below this are skipped by the
/// quasi-Newton updates.
pub const CURVATURE_SKIP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// Fixed-step gradient descent.
    Gd,
    /// Gradient descent with a quadratic-fit step length.
    GdQuad,
    /// Fletcher-Reeves conjugate gradients.
    CgFr,
    /// Full-matrix BFGS.
    Bfgs,
    /// Limited-memory BFGS.
    Lbfgs,
}

impl std::str::FromStr for OptimizerKind {
    type Err = CqeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(OptimizerKind::Gd),
            "gd-quad" => Ok(OptimizerKind::GdQuad),
            "cg-fr" => Ok(OptimizerKind::CgFr),
            "bfgs" => Ok(OptimizerKind::Bfgs),
            "lbfgs" => Ok(OptimizerKind::Lbfgs),
            other => Err(CqeError::Invalid(format!(
                "unknown optimizer `{other}` (expected gd, gd-quad, cg-fr, bfgs, lbfgs)"
            ))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::GdQuad => "gd-quad",
            OptimizerKind::CgFr => "cg-fr",
            OptimizerKind::Bfgs => "bfgs",
            OptimizerKind::Lbfgs => "lbfgs",
        };
        write!(f, "{name}")
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual norm fell below the threshold.
    Converged,
    /// Iteration cap reached.
    MaxIterations,
    /// No acceptable step length (or a non-descent direction).
    LineSearchFailed,
    /// Sparsification left nothing to apply.
    Stalled,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::LineSearchFailed => "line_search_failed",
            Termination::Stalled => "stalled",
        };
        write!(f, "{name}")
    }
}

/// Full configuration of one solver run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub optimizer: OptimizerKind,
    pub encoding: Encoding,
    /// Convergence threshold on the residual 2-norm.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Merge window depth; 0 disables merging.
    pub p_depth: usize,
    /// Relative sparsity cut in [0, 1]; 0 keeps every useful component.
    pub sparsity_c: f64,
    pub criterion: SparsityCriterion,
    /// Keep merge-window elements regardless of the sparsity cut.
    pub include_window: bool,
    /// Step length for `gd`; also the probe length for `gd-quad`.
    pub alpha_fixed: f64,
    /// Upper clamp for the `gd-quad` fitted step.
    pub alpha_max: f64,
    pub lbfgs_memory: usize,
    pub wolfe_c1: f64,
    /// Curvature constant; defaults per optimizer when `None`
    /// (0.1 for cg-fr, 0.9 for the quasi-Newton methods).
    pub wolfe_c2: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Bfgs,
            encoding: Encoding::Fermionic,
            threshold: 1e-5,
            max_iterations: 300,
            p_depth: 0,
            sparsity_c: 0.0,
            criterion: SparsityCriterion::Abs,
            include_window: false,
            alpha_fixed: 0.5,
            alpha_max: 1.0,
            lbfgs_memory: 3,
            wolfe_c1: 1e-4,
            wolfe_c2: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(CqeError::Invalid("threshold must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CqeError::Invalid("max-iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sparsity_c) {
            return Err(CqeError::Invalid("sparsity-c must lie in [0, 1]".into()));
        }
        let bad_step = |a: f64| a.is_nan() || a <= 0.0;
        if bad_step(self.alpha_fixed) || bad_step(self.alpha_max) {
            return Err(CqeError::Invalid("step lengths must be positive".into()));
        }
        if self.lbfgs_memory == 0 {
            return Err(CqeError::Invalid("lbfgs-memory must be at least 1".into()));
        }
        let c2 = self.effective_wolfe_c2();
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < c2 && c2 < 1.0) {
            return Err(CqeError::Invalid(
                "line-search constants need 0 < c1 < c2 < 1".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_wolfe_c2(&self) -> f64 {
        self.wolfe_c2.unwrap_or(match self.optimizer {
            OptimizerKind::CgFr => 0.1,
            _ => 0.9,
        })
    }

    fn uses_line_search(&self) -> bool {
        matches!(
            self.optimizer,
            OptimizerKind::CgFr | OptimizerKind::Bfgs | OptimizerKind::Lbfgs
        )
    }
}

/// Per-iteration trace entry.  `grad_norm` is the residual norm that
/// drove the step; `energy` and the circuit counts describe the state
/// after the step was applied.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub n_layers: usize,
    pub n_terms: usize,
    pub cnot_circuit: usize,
    pub cnot_cumulative: u64,
    pub line_search_evals: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub termination: Termination,
    pub iterations: usize,
    pub energy: f64,
    /// Energy of the bare reference determinant.
    pub reference_energy: f64,
    pub final_grad_norm: f64,
    pub records: Vec<IterationRecord>,
    pub ansatz: Ansatz,
    pub pool_size: usize,
    /// Residual-vector components measured by the per-iteration sweeps
    /// (`iterations × pool_size`); line-search measurements are counted
    /// separately in the records.
    pub residual_evaluations: u64,
    pub cnot_circuit: usize,
    pub cnot_cumulative: u64,
}

struct TrialStep {
    ansatz: Ansatz,
    from: usize,
    energy: f64,
    residual: Option<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn try_step(
    base: &Ansatz,
    checkpoints: &[Statevector],
    kept: &[(usize, f64)],
    alpha: f64,
    p_depth: usize,
    gens: &[PauliSum],
    h: &PauliSum,
    need_residual: bool,
) -> Result<TrialStep> {
    let mut trial = base.clone();
    let scaled: Vec<(usize, f64)> = kept.iter().map(|&(e, v)| (e, alpha * v)).collect();
    let from = trial.merge_step(&scaled, p_depth)?;
    let mut psi = checkpoints[from].clone();
    trial.apply_from(&mut psi, gens, from);
    let mut h_psi = Statevector::zeroed(psi.n_qubits());
    psi.apply_sum_into(h, &mut h_psi);
    let energy = psi.inner(&h_psi).re;
    let residual = if need_residual {
        Some(residual_vector(&psi, &h_psi, gens)?)
    } else {
        None
    };
    Ok(TrialStep {
        ansatz: trial,
        from,
        energy,
        residual,
    })
}

fn extend_checkpoints(
    checkpoints: &mut Vec<Statevector>,
    ansatz: &Ansatz,
    gens: &[PauliSum],
    from: usize,
) {
    checkpoints.truncate(from + 1);
    for layer in &ansatz.layers()[from..] {
        let mut next = checkpoints.last().expect("reference checkpoint").clone();
        for &(e, theta) in layer {
            next.apply_generator_exponential(&gens[e], theta);
        }
        checkpoints.push(next);
    }
}

/// Strong-Wolfe line search (bracketing plus interpolating zoom).
///
/// `eval` returns `(phi, dphi, payload)` at a trial step length.  On
/// success the accepted length satisfies both the sufficient-decrease
/// and the curvature condition; `None` means no acceptable point was
/// found within `max_evals` evaluations.
pub fn strong_wolfe_search<T, F>(
    mut eval: F,
    phi0: f64,
    slope0: f64,
    alpha0: f64,
    c1: f64,
    c2: f64,
    max_evals: usize,
) -> Result<Option<(f64, usize, T)>>
where
    F: FnMut(f64) -> Result<(f64, f64, T)>,
{
    debug_assert!(slope0 < 0.0, "line search needs a descent direction");
    let mut evals = 0usize;
    let mut prev = (0.0, phi0, slope0);
    let mut alpha = alpha0;
    let mut first = true;
    loop {
        if evals >= max_evals || alpha > 64.0 {
            return Ok(None);
        }
        evals += 1;
        let (phi_a, dphi_a, payload) = eval(alpha)?;
        if phi_a > phi0 + c1 * alpha * slope0 || (!first && phi_a >= prev.1) {
            let cur = (alpha, phi_a, dphi_a);
            return wolfe_zoom(&mut eval, prev, cur, phi0, slope0, c1, c2, max_evals, evals);
        }
        if dphi_a.abs() <= -c2 * slope0 {
            return Ok(Some((alpha, evals, payload)));
        }
        if dphi_a >= 0.0 {
            let cur = (alpha, phi_a, dphi_a);
            return wolfe_zoom(&mut eval, cur, prev, phi0, slope0, c1, c2, max_evals, evals);
        }
        prev = (alpha, phi_a, dphi_a);
        alpha *= 2.0;
        first = false;
    }
}

/// Minimizer of the cubic through `(a, fa)` with slope `fpa` at `a` and
/// the two extra points `(b, fb)`, `(c, fc)`; `None` when degenerate.
fn cubic_minimum(a: f64, fa: f64, fpa: f64, b: f64, fb: f64, c: f64, fc: f64) -> Option<f64> {
    let db = b - a;
    let dc = c - a;
    let denom = (db * dc).powi(2) * (db - dc);
    if denom == 0.0 {
        return None;
    }
    let t1 = fb - fa - fpa * db;
    let t2 = fc - fa - fpa * dc;
    let ca = (dc.powi(2) * t1 - db.powi(2) * t2) / denom;
    let cb = (-dc.powi(3) * t1 + db.powi(3) * t2) / denom;
    let radical = cb * cb - 3.0 * ca * fpa;
    if radical < 0.0 || ca == 0.0 {
        return None;
    }
    let xmin = a + (-cb + radical.sqrt()) / (3.0 * ca);
    xmin.is_finite().then_some(xmin)
}

/// Minimizer of the parabola through `(a, fa)` with slope `fpa` at `a`
/// and the point `(b, fb)`; `None` when degenerate.
fn quad_minimum(a: f64, fa: f64, fpa: f64, b: f64, fb: f64) -> Option<f64> {
    let db = b - a;
    if db == 0.0 {
        return None;
    }
    let cb = (fb - fa - fpa * db) / (db * db);
    if cb == 0.0 {
        return None;
    }
    let xmin = a - fpa / (2.0 * cb);
    xmin.is_finite().then_some(xmin)
}

/// Zoom phase between a low point satisfying sufficient decrease and a
/// high bracket endpoint (Wolfe bracketing invariants).  Trial points
/// come from a safeguarded cubic through the endpoints and the most
/// recently discarded point, falling back to a quadratic fit and then
/// to bisection when an interpolant degenerates or lands too close to
/// an endpoint.
#[allow(clippy::too_many_arguments)]
fn wolfe_zoom<T, F>(
    eval: &mut F,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    phi0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    max_evals: usize,
    mut evals: usize,
) -> Result<Option<(f64, usize, T)>>
where
    F: FnMut(f64) -> Result<(f64, f64, T)>,
{
    let mut rec: Option<(f64, f64)> = None;
    loop {
        let dalpha = hi.0 - lo.0;
        let width = dalpha.abs();
        if evals >= max_evals || width < 1e-12 {
            return Ok(None);
        }
        let (left, right) = if dalpha >= 0.0 {
            (lo.0, hi.0)
        } else {
            (hi.0, lo.0)
        };
        let a_j = rec
            .and_then(|(a_rec, phi_rec)| cubic_minimum(lo.0, lo.1, lo.2, hi.0, hi.1, a_rec, phi_rec))
            .filter(|a| {
                let guard = 0.2 * width;
                *a >= left + guard && *a <= right - guard
            })
            .or_else(|| {
                quad_minimum(lo.0, lo.1, lo.2, hi.0, hi.1).filter(|a| {
                    let guard = 0.1 * width;
                    *a >= left + guard && *a <= right - guard
                })
            })
            .unwrap_or(lo.0 + 0.5 * dalpha);
        evals += 1;
        let (phi_j, dphi_j, payload) = eval(a_j)?;
        if phi_j > phi0 + c1 * a_j * slope0 || phi_j >= lo.1 {
            rec = Some((hi.0, hi.1));
            hi = (a_j, phi_j, dphi_j);
        } else {
            if dphi_j.abs() <= -c2 * slope0 {
                return Ok(Some((a_j, evals, payload)));
            }
            if dphi_j * (hi.0 - lo.0) >= 0.0 {
                rec = Some((hi.0, hi.1));
                hi = lo;
            } else {
                rec = Some((lo.0, lo.1));
            }
            lo = (a_j, phi_j, dphi_j);
        }
    }
}

/// Inverse-Hessian BFGS update in the O(mu^2) two-rank form.  Skipped
/// (matrix untouched) when the curvature `y·s` is not positive enough.
pub fn bfgs_update(h_inv: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) -> bool {
    let sy = s.dot(y);
    if sy <= CURVATURE_SKIP_THRESHOLD {
        return false;
    }
    let hy = &*h_inv * y;
    let yhy = y.dot(&hy);
    let ss = s * s.transpose();
    let cross = &hy * s.transpose() + s * hy.transpose();
    *h_inv += ((sy + yhy) / (sy * sy)) * ss - cross / sy;
    true
}

/// Two-loop recursion producing the limited-memory BFGS direction
/// `-H·g`, with the usual `(s·y / y·y)` initial scaling.
pub fn lbfgs_direction(
    history: &VecDeque<(DVector<f64>, DVector<f64>)>,
    grad: &DVector<f64>,
) -> DVector<f64> {
    if history.is_empty() {
        return -grad;
    }
    let mut q = grad.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / y.dot(s);
        let a = rho * s.dot(&q);
        q -= y * a;
        alphas.push(a);
    }
    let (s_last, y_last) = history.back().expect("nonempty history");
    let gamma = s_last.dot(y_last) / y_last.dot(y_last);
    let mut r = q * gamma;
    for ((s, y), &a) in history.iter().zip(alphas.iter().rev()) {
        let rho = 1.0 / y.dot(s);
        let b = rho * y.dot(&r);
        r += s * (a - b);
    }
    -r
}

/// Quadratic-fit step length: the minimizer of the parabola through
/// `(0, phi0)` with slope `slope0` and the probe `(alpha_t, phi_t)`,
/// clamped to `(0, alpha_max]` with the probe length as the fallback
/// when the fit is not convex.
pub fn quadratic_fit_alpha(
    phi0: f64,
    slope0: f64,
    alpha_t: f64,
    phi_t: f64,
    alpha_max: f64,
) -> f64 {
    let denom = phi_t - phi0 - slope0 * alpha_t;
    if denom <= 0.0 {
        return alpha_t.min(alpha_max);
    }
    let alpha = -slope0 * alpha_t * alpha_t / (2.0 * denom);
    if !alpha.is_finite() || alpha <= 0.0 {
        alpha_t.min(alpha_max)
    } else {
        alpha.min(alpha_max)
    }
}

enum OptimizerState {
    Steepest,
    CgFr {
        prev_grad: Option<DVector<f64>>,
        prev_dir: DVector<f64>,
    },
    Bfgs {
        h_inv: DMatrix<f64>,
    },
    Lbfgs {
        memory: usize,
        history: VecDeque<(DVector<f64>, DVector<f64>)>,
    },
}

impl OptimizerState {
    fn new(kind: OptimizerKind, mu: usize, memory: usize) -> Self {
        match kind {
            OptimizerKind::Gd | OptimizerKind::GdQuad => OptimizerState::Steepest,
            OptimizerKind::CgFr => OptimizerState::CgFr {
                prev_grad: None,
                prev_dir: DVector::zeros(mu),
            },
            OptimizerKind::Bfgs => OptimizerState::Bfgs {
                h_inv: DMatrix::identity(mu, mu),
            },
            OptimizerKind::Lbfgs => OptimizerState::Lbfgs {
                memory,
                history: VecDeque::new(),
            },
        }
    }

    fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        let g = DVector::from_column_slice(grad);
        let d = match self {
            OptimizerState::Steepest => -&g,
            OptimizerState::CgFr {
                prev_grad,
                prev_dir,
            } => {
                let mut d = match prev_grad.as_ref() {
                    None => -&g,
                    Some(pg) => {
                        let gg = g.dot(&g);
                        // Restart on lost conjugacy: successive residuals
                        // far from orthogonal.
                        let beta = if g.dot(pg) / gg > 0.9 {
                            0.0
                        } else {
                            gg / pg.dot(pg)
                        };
                        -&g + &*prev_dir * beta
                    }
                };
                if d.dot(&g) >= 0.0 {
                    d = -&g;
                }
                *prev_grad = Some(g);
                *prev_dir = d.clone();
                d
            }
            OptimizerState::Bfgs { h_inv, .. } => -(&*h_inv * &g),
            OptimizerState::Lbfgs { history, .. } => lbfgs_direction(history, &g),
        };
        d.iter().copied().collect()
    }

    fn observe_step(&mut self, s: &[f64], y: &[f64]) {
        match self {
            OptimizerState::Steepest | OptimizerState::CgFr { .. } => {}
            OptimizerState::Bfgs { h_inv } => {
                let s = DVector::from_column_slice(s);
                let y = DVector::from_column_slice(y);
                bfgs_update(h_inv, &s, &y);
            }
            OptimizerState::Lbfgs { memory, history } => {
                let s = DVector::from_column_slice(s);
                let y = DVector::from_column_slice(y);
                let sy = s.dot(&y);
                if sy > CURVATURE_SKIP_THRESHOLD {
                    history.push_back((s, y));
                    if history.len() > *memory {
                        history.pop_front();
                    }
                }
            }
        }
    }
}

/// Runs the solver to convergence (or another stop) on one problem.
pub fn run_cqe(m: &MolecularIntegrals, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let n = m.n_qubits();
    let hamiltonian = hamiltonian_to_pauli(m);
    let pool = build_pool(m.norb());
    let mu = pool.len();
    let gens = pool_generators(&pool, n, config.encoding);
    let costs: Vec<usize> = gens.iter().map(generator_cnot_cost).collect();

    let mut ansatz = Ansatz::new();
    let mut checkpoints = vec![Statevector::from_determinant(n, m.reference_determinant())];
    let (mut energy, mut residual) = {
        let psi = &checkpoints[0];
        let mut h_psi = Statevector::zeroed(n);
        psi.apply_sum_into(&hamiltonian, &mut h_psi);
        let e = psi.inner(&h_psi).re;
        (e, residual_vector(psi, &h_psi, &gens)?)
    };
    let reference_energy = energy;

    let mut opt = OptimizerState::new(config.optimizer, mu, config.lbfgs_memory);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut cnot_cumulative: u64 = 0;
    // Previous accepted line: (starting energy, slope, accepted length).
    let mut prev_line: Option<(f64, f64, f64)> = None;
    let c2 = config.effective_wolfe_c2();

    let mut iter = 0usize;
    let termination = loop {
        let grad_norm = norm2(&residual);
        if grad_norm < config.threshold {
            break Termination::Converged;
        }
        if iter >= config.max_iterations {
            break Termination::MaxIterations;
        }
        let direction = opt.direction(&residual);
        let window = ansatz.window_indices(config.p_depth);
        let kept = sparsify(
            &direction,
            &residual,
            config.sparsity_c,
            config.criterion,
            config.include_window,
            &window,
        );
        if kept.is_empty() {
            break Termination::Stalled;
        }
        let slope0: f64 = kept.iter().map(|&(e, v)| residual[e] * v).sum();

        let (alpha, ls_evals, accepted) = if config.uses_line_search() {
            if slope0 >= 0.0 {
                break Termination::LineSearchFailed;
            }
            // Initial trial length: 0.5 on the very first step; after
            // that, the minimizer of the parabola fitted along the
            // previous search line (through its starting energy and
            // slope and the energy it reached), clamped to [1/2, 1].
            let alpha0 = match prev_line {
                None => 0.5,
                Some((prev_phi0, prev_slope0, prev_alpha)) => {
                    let guess =
                        quadratic_fit_alpha(prev_phi0, prev_slope0, prev_alpha, energy, f64::INFINITY);
                    if guess.is_finite() {
                        guess.clamp(0.5, 1.0)
                    } else {
                        1.0
                    }
                }
            };
            let mut kept_dense = vec![0.0; mu];
            for &(e, v) in &kept {
                kept_dense[e] = v;
            }
            let outcome = strong_wolfe_search(
                |a| {
                    let step = try_step(
                        &ansatz,
                        &checkpoints,
                        &kept,
                        a,
                        config.p_depth,
                        &gens,
                        &hamiltonian,
                        true,
                    )?;
                    let dphi: f64 = step
                        .residual
                        .as_ref()
                        .expect("line-search trial measures the residual")
                        .iter()
                        .zip(&kept_dense)
                        .map(|(r, d)| r * d)
                        .sum();
                    Ok((step.energy, dphi, step))
                },
                energy,
                slope0,
                alpha0,
                config.wolfe_c1,
                c2,
                20,
            )?;
            match outcome {
                Some((alpha, evals, step)) => (alpha, evals, step),
                None => break Termination::LineSearchFailed,
            }
        } else if config.optimizer == OptimizerKind::GdQuad {
            let alpha_t = config.alpha_fixed;
            let probe = try_step(
                &ansatz,
                &checkpoints,
                &kept,
                alpha_t,
                config.p_depth,
                &gens,
                &hamiltonian,
                false,
            )?;
            let alpha = quadratic_fit_alpha(energy, slope0, alpha_t, probe.energy, config.alpha_max);
            let step = try_step(
                &ansatz,
                &checkpoints,
                &kept,
                alpha,
                config.p_depth,
                &gens,
                &hamiltonian,
                true,
            )?;
            (alpha, 1, step)
        } else {
            let alpha = config.alpha_fixed;
            let step = try_step(
                &ansatz,
                &checkpoints,
                &kept,
                alpha,
                config.p_depth,
                &gens,
                &hamiltonian,
                true,
            )?;
            (alpha, 0, step)
        };

        let new_residual = accepted.residual.expect("accepted step carries a residual");
        let mut s_dense = vec![0.0; mu];
        for &(e, v) in &kept {
            s_dense[e] = alpha * v;
        }
        let y_dense: Vec<f64> = new_residual
            .iter()
            .zip(&residual)
            .map(|(new, old)| new - old)
            .collect();
        opt.observe_step(&s_dense, &y_dense);

        let from = accepted.from;
        ansatz = accepted.ansatz;
        extend_checkpoints(&mut checkpoints, &ansatz, &gens, from);

        let cnot_circuit = ansatz.circuit_cnot_cost(&costs);
        cnot_cumulative += cnot_circuit as u64;
        records.push(IterationRecord {
            iteration: iter,
            energy: accepted.energy,
            grad_norm,
            alpha,
            n_layers: ansatz.n_layers(),
            n_terms: ansatz.n_terms(),
            cnot_circuit,
            cnot_cumulative,
            line_search_evals: ls_evals,
        });
        prev_line = Some((energy, slope0, alpha));
        energy = accepted.energy;
        residual = new_residual;
        iter += 1;
    };

    Ok(RunResult {
        termination,
        iterations: records.len(),
        energy,
        reference_energy,
        final_grad_norm: norm2(&residual),
        pool_size: mu,
        residual_evaluations: (records.len() * mu) as u64,
        cnot_circuit: ansatz.circuit_cnot_cost(&costs),
        cnot_cumulative,
        records,
        ansatz,
    })
}
