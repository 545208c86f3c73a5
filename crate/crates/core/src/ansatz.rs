//! Product ansatz of two-body exponential unitaries.
//!
//! The prepared state is
//! `|psi> = U_L ··· U_1 |ref>` with each layer
//! `U = prod_e exp(theta_e G_e)` over a set of pool elements with real
//! coefficients.  Within a layer elements are kept in ascending pool
//! order; layers are applied oldest first.
//!
//! Two depth-control heuristics shape the circuit as the solver runs:
//!
//! * **Sparsification** keeps only the strongest components of a
//!   proposed step, scored either by magnitude (`Abs`) or by predicted
//!   energy descent (`Descent`), relative to the best score via the
//!   cut `score >= c · max_score`.
//! * **Merging** folds a new step into the trailing `p_depth` layers:
//!   elements already present in that window have their coefficients
//!   added in place instead of deepening the circuit, and optionally
//!   (`include`) such elements bypass the sparsity cut entirely since
//!   merging them is free.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CqeError, Result};
use crate::pauli::PauliSum;
use crate::statevector::Statevector;

/// How sparsification scores a proposed step component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityCriterion {
    /// Coefficient magnitude `|d_e|`.
    Abs,
    /// Predicted first-order energy descent `-g_e · d_e`, floored at 0.
    Descent,
}

impl std::str::FromStr for SparsityCriterion {
    type Err = CqeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(SparsityCriterion::Abs),
            "descent" => Ok(SparsityCriterion::Descent),
            other => Err(CqeError::Invalid(format!(
                "unknown sparsity criterion `{other}` (expected abs or descent)"
            ))),
        }
    }
}

impl std::fmt::Display for SparsityCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SparsityCriterion::Abs => write!(f, "abs"),
            SparsityCriterion::Descent => write!(f, "descent"),
        }
    }
}

/// Filters a step direction down to its significant components.
///
/// Components score `|d_e|` (`Abs`) or `max(0, -g_e d_e)` (`Descent`);
/// a component survives when its score is positive and at least
/// `c · max_score`.  At `c = 1` exactly the first best-scoring
/// component survives.  When `include` is set, elements of the merge
/// `window` with a nonzero component are kept regardless of score.  An
/// all-zero score vector yields an empty result (the step is dead).
pub fn sparsify(
    direction: &[f64],
    gradient: &[f64],
    c: f64,
    criterion: SparsityCriterion,
    include: bool,
    window: &BTreeSet<usize>,
) -> Vec<(usize, f64)> {
    debug_assert_eq!(direction.len(), gradient.len());
    let score = |e: usize| -> f64 {
        match criterion {
            SparsityCriterion::Abs => direction[e].abs(),
            SparsityCriterion::Descent => (-gradient[e] * direction[e]).max(0.0),
        }
    };
    let max_score = (0..direction.len()).map(score).fold(0.0, f64::max);
    if max_score <= 0.0 {
        return Vec::new();
    }
    let mut kept = Vec::new();
    if c >= 1.0 {
        let best = (0..direction.len())
            .find(|&e| score(e) == max_score)
            .expect("max score exists");
        for (e, &d) in direction.iter().enumerate() {
            let exempt = include && window.contains(&e) && d != 0.0;
            if e == best || exempt {
                kept.push((e, d));
            }
        }
    } else {
        let cut = c * max_score;
        for (e, &d) in direction.iter().enumerate() {
            let s = score(e);
            let exempt = include && window.contains(&e) && d != 0.0;
            if (s > 0.0 && s >= cut) || exempt {
                kept.push((e, d));
            }
        }
    }
    kept
}

/// Layered product ansatz; each entry is `(pool index, coefficient)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ansatz {
    layers: Vec<Vec<(usize, f64)>>,
}

impl Ansatz {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layers(&self) -> &[Vec<(usize, f64)>] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total number of stored exponentials.
    pub fn n_terms(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Pool indices present in the trailing `p_depth` layers.
    pub fn window_indices(&self, p_depth: usize) -> BTreeSet<usize> {
        let start = self.layers.len().saturating_sub(p_depth);
        self.layers[start..]
            .iter()
            .flat_map(|layer| layer.iter().map(|&(e, _)| e))
            .collect()
    }

    /// Folds a step into the ansatz: entries found in the trailing
    /// `p_depth` layers are added to the existing coefficient in place,
    /// the remainder is appended as one new layer.  Returns the index
    /// of the earliest modified layer, which is where state preparation
    /// must resume from.
    ///
    /// Structurally an element can appear at most once inside any
    /// trailing window (merging never duplicates it there); finding it
    /// twice means the ansatz is corrupt and is reported as an error.
    pub fn merge_step(&mut self, entries: &[(usize, f64)], p_depth: usize) -> Result<usize> {
        let start = self.layers.len().saturating_sub(p_depth);
        let mut earliest = self.layers.len();
        let mut remainder = Vec::new();
        for &(e, value) in entries {
            let mut found_in = None;
            for (offset, layer) in self.layers[start..].iter().enumerate() {
                if layer.iter().any(|&(idx, _)| idx == e) {
                    if found_in.is_some() {
                        return Err(CqeError::Invalid(format!(
                            "pool element {e} appears in two layers of the merge window"
                        )));
                    }
                    found_in = Some(start + offset);
                }
            }
            match found_in {
                Some(layer_idx) => {
                    for slot in self.layers[layer_idx].iter_mut() {
                        if slot.0 == e {
                            slot.1 += value;
                        }
                    }
                    earliest = earliest.min(layer_idx);
                }
                None => remainder.push((e, value)),
            }
        }
        if !remainder.is_empty() {
            remainder.sort_by_key(|&(e, _)| e);
            earliest = earliest.min(self.layers.len());
            self.layers.push(remainder);
        }
        Ok(earliest)
    }

    /// Applies layers `from..` to `state` in place.
    pub fn apply_from(&self, state: &mut Statevector, generators: &[PauliSum], from: usize) {
        for layer in &self.layers[from..] {
            for &(e, theta) in layer {
                state.apply_generator_exponential(&generators[e], theta);
            }
        }
    }

    /// Prepares the ansatz state from scratch on the reference
    /// determinant.
    pub fn prepare_state(
        &self,
        n_qubits: usize,
        reference: u64,
        generators: &[PauliSum],
    ) -> Statevector {
        let mut state = Statevector::from_determinant(n_qubits, reference);
        self.apply_from(&mut state, generators, 0);
        state
    }

    /// Total two-qubit-gate cost of the circuit, given per-element costs.
    pub fn circuit_cnot_cost(&self, element_costs: &[usize]) -> usize {
        self.layers
            .iter()
            .flat_map(|layer| layer.iter().map(|&(e, _)| element_costs[e]))
            .sum()
    }
}

/// Standard compilation cost of one exponential: each Pauli string of
/// weight `w` costs `2(w-1)` CNOTs (a ladder down and back up).
pub fn generator_cnot_cost(gen: &PauliSum) -> usize {
    gen.iter()
        .map(|(s, _)| 2 * (s.weight().saturating_sub(1)) as usize)
        .sum()
}
