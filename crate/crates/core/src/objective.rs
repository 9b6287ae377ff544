//! Pointwise objectives `f(S, φ)`, exact conditional expected marginal
//! gains, and exhaustive checkers for adaptive monotonicity and adaptive
//! submodularity.
//!
//! The conditional expected marginal benefit of item `e` under observations
//! `ψ` is
//!
//! ```text
//! Δ(e | ψ) = E[ f(dom(ψ) ∪ {e}, Φ) − f(dom(ψ), Φ) | Φ consistent with ψ ]
//! ```
//!
//! computed exactly by enumerating the worlds consistent with `ψ`. An
//! objective is adaptive monotone when every such gain is nonnegative, and
//! adaptive submodular when gains never increase as `ψ` is refined to a
//! superset observation `ψ′` (diminishing returns over observations). The
//! checkers verify both properties by exhausting every positive-probability
//! partial realization under a size cap.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Model, PartialRealization, Realization};
use crate::util::KahanSum;
use crate::ItemSet;

/// Absolute tolerance used by the gain comparisons in both checkers.
pub const CHECK_TOL: f64 = 1e-9;

/// Cap on `(max_outcomes + 1)^n` above which the exhaustive checkers refuse
/// to run.
pub const CHECK_STATE_CAP: usize = 200_000;

type EvalFn = dyn Fn(&ItemSet, &Realization) -> f64 + Send + Sync;

/// How an objective computes `f(S, φ)`.
#[derive(Clone)]
pub enum ObjectiveKind {
    /// `f(S, φ) = |{e ∈ S : φ(e) = success_outcome}|`.
    Count { success_outcome: usize },
    /// `f(S, φ) = Σ_{e ∈ S} weights[e][φ(e)]`.
    Modular { weights: Vec<Vec<f64>> },
    /// `f(S, φ)` = number of universe elements covered by a selected item
    /// whose outcome equals `success_outcome`.
    Coverage {
        universe_size: usize,
        covers: Vec<Vec<usize>>,
        success_outcome: usize,
    },
    /// `f = 1` iff every listed item is selected and took `success_outcome`.
    And {
        items: Vec<usize>,
        success_outcome: usize,
    },
    /// Arbitrary pointwise evaluator supplied by the caller.
    Custom(Arc<EvalFn>),
}

impl fmt::Debug for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::Count { success_outcome } => f
                .debug_struct("Count")
                .field("success_outcome", success_outcome)
                .finish(),
            ObjectiveKind::Modular { weights } => {
                f.debug_struct("Modular").field("weights", weights).finish()
            }
            ObjectiveKind::Coverage {
                universe_size,
                covers,
                success_outcome,
            } => f
                .debug_struct("Coverage")
                .field("universe_size", universe_size)
                .field("covers", covers)
                .field("success_outcome", success_outcome)
                .finish(),
            ObjectiveKind::And {
                items,
                success_outcome,
            } => f
                .debug_struct("And")
                .field("items", items)
                .field("success_outcome", success_outcome)
                .finish(),
            ObjectiveKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A deterministic pointwise objective `f(S, φ) ≥ 0` with a display name.
#[derive(Debug, Clone)]
pub struct Objective {
    name: String,
    kind: ObjectiveKind,
}

impl Objective {
    /// Count of selected items whose outcome is `success_outcome`.
    pub fn count(success_outcome: usize) -> Self {
        Objective {
            name: "count".into(),
            kind: ObjectiveKind::Count { success_outcome },
        }
    }

    /// Modular objective `f(S, φ) = Σ_{e ∈ S} weights[e][φ(e)]`.
    pub fn modular(weights: Vec<Vec<f64>>) -> Self {
        Objective {
            name: "modular".into(),
            kind: ObjectiveKind::Modular { weights },
        }
    }

    /// Stochastic set coverage: item `e` covers `covers[e]` when its outcome
    /// is 0 ("works").
    pub fn coverage(universe_size: usize, covers: Vec<Vec<usize>>) -> Self {
        Objective {
            name: "coverage".into(),
            kind: ObjectiveKind::Coverage {
                universe_size,
                covers,
                success_outcome: 0,
            },
        }
    }

    /// All-or-nothing conjunction over `items`, success outcome 0.
    pub fn and_of(items: Vec<usize>) -> Self {
        Objective {
            name: "and".into(),
            kind: ObjectiveKind::And {
                items,
                success_outcome: 0,
            },
        }
    }

    /// Wraps an arbitrary evaluator.
    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&ItemSet, &Realization) -> f64 + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            kind: ObjectiveKind::Custom(Arc::new(eval)),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Evaluates `f(selected, phi)` after checking index ranges.
    pub fn evaluate(&self, selected: &ItemSet, phi: &Realization) -> Result<f64> {
        let ground = phi.n_items();
        if let Some(&bad) = selected.iter().find(|&&e| e >= ground) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                ground,
            });
        }
        Ok(self.eval_unchecked(selected, phi))
    }

    pub(crate) fn eval_unchecked(&self, selected: &ItemSet, phi: &Realization) -> f64 {
        match &self.kind {
            ObjectiveKind::Count { success_outcome } => selected
                .iter()
                .filter(|&&e| phi.outcome(e) == *success_outcome)
                .count() as f64,
            ObjectiveKind::Modular { weights } => {
                selected.iter().map(|&e| weights[e][phi.outcome(e)]).sum()
            }
            ObjectiveKind::Coverage {
                universe_size,
                covers,
                success_outcome,
            } => {
                let mut covered = vec![false; *universe_size];
                for &e in selected {
                    if phi.outcome(e) == *success_outcome {
                        for &u in &covers[e] {
                            covered[u] = true;
                        }
                    }
                }
                covered.iter().filter(|&&c| c).count() as f64
            }
            ObjectiveKind::And {
                items,
                success_outcome,
            } => {
                let all = items
                    .iter()
                    .all(|&e| selected.contains(&e) && phi.outcome(e) == *success_outcome);
                if all {
                    1.0
                } else {
                    0.0
                }
            }
            ObjectiveKind::Custom(eval) => eval(selected, phi),
        }
    }

    /// Verifies that the objective's declared shape fits `model` (item
    /// counts, outcome counts, universe bounds). Custom objectives are
    /// opaque and always accepted.
    pub(crate) fn check_arity(&self, model: &Model) -> Result<()> {
        let n = model.n_items();
        match &self.kind {
            ObjectiveKind::Count { .. } | ObjectiveKind::Custom(_) => Ok(()),
            ObjectiveKind::Modular { weights } => {
                if weights.len() != n {
                    return Err(Error::InconsistentInstance(format!(
                        "modular objective has {} weight rows for {} items",
                        weights.len(),
                        n
                    )));
                }
                for (item, row) in weights.iter().enumerate() {
                    if row.len() != model.n_outcomes(item) {
                        return Err(Error::InconsistentInstance(format!(
                            "item {}: {} weights for {} outcomes",
                            item,
                            row.len(),
                            model.n_outcomes(item)
                        )));
                    }
                }
                Ok(())
            }
            ObjectiveKind::Coverage {
                universe_size,
                covers,
                ..
            } => {
                if covers.len() != n {
                    return Err(Error::InconsistentInstance(format!(
                        "coverage objective has {} cover sets for {} items",
                        covers.len(),
                        n
                    )));
                }
                for set in covers {
                    if let Some(&bad) = set.iter().find(|&&u| u >= *universe_size) {
                        return Err(Error::InvalidSpec(format!(
                            "coverage set element {bad} outside universe 0..{universe_size}"
                        )));
                    }
                }
                Ok(())
            }
            ObjectiveKind::And { items, .. } => {
                if let Some(&bad) = items.iter().find(|&&e| e >= n) {
                    return Err(Error::IndexOutOfRange {
                        index: bad,
                        ground: n,
                    });
                }
                Ok(())
            }
        }
    }
}

/// Exact conditional expected marginal benefit `Δ(item | psi)`, by
/// enumeration of the worlds consistent with `psi`.
pub fn expected_marginal_gain(
    model: &Model,
    objective: &Objective,
    item: usize,
    psi: &PartialRealization,
) -> Result<f64> {
    if item >= model.n_items() {
        return Err(Error::IndexOutOfRange {
            index: item,
            ground: model.n_items(),
        });
    }
    if psi.observes(item) {
        return Err(Error::ItemAlreadyObserved { item });
    }
    let base = psi.domain_set();
    let mut extended = base.clone();
    extended.insert(item);

    let mut acc = KahanSum::new();
    let mut scratch = Realization::new(vec![0; model.n_items()]);
    model.for_each_consistent(psi, |outcomes, weight| {
        scratch = Realization::new(outcomes.to_vec());
        let gain =
            objective.eval_unchecked(&extended, &scratch) - objective.eval_unchecked(&base, &scratch);
        acc.add(weight * gain);
    })?;
    Ok(acc.total())
}

/// One recorded violation from a checker run.
///
/// Monotonicity violations carry only `psi`; submodularity violations pair
/// `psi` with the refined `psi_prime` whose gain grew.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub psi: PartialRealization,
    pub psi_prime: Option<PartialRealization>,
    pub item: usize,
    pub gain_at_psi: f64,
    pub gain_at_psi_prime: Option<f64>,
}

/// Result of an exhaustive checker run: passed iff no witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        CheckReport {
            passed: witnesses.is_empty(),
            witnesses,
        }
    }
}

/// Every positive-probability partial realization of `model`, in a
/// deterministic lexicographic order (item-major; "unobserved" sorts before
/// any outcome). Errors if `(max_outcomes + 1)^n` exceeds the checker cap.
pub fn enumerate_partial_realizations(model: &Model) -> Result<Vec<PartialRealization>> {
    let bound = model
        .partial_state_bound()
        .unwrap_or(usize::MAX);
    if bound > CHECK_STATE_CAP {
        return Err(Error::TooLargeToCheck {
            states: bound,
            cap: CHECK_STATE_CAP,
        });
    }

    let n = model.n_items();
    // Per-item states: None, then each positive-probability outcome.
    let states: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| {
            std::iter::once(None)
                .chain((0..model.n_outcomes(i)).filter(|&o| model.prior(i, o) > 0.0).map(Some))
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let psi = PartialRealization::from_pairs(
            (0..n).filter_map(|i| states[i][idx[i]].map(|o| (i, o))),
        );
        out.push(psi);

        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < states[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Checks `Δ(e | ψ) ≥ -CHECK_TOL` for every positive-probability `ψ` and
/// every unobserved `e`: adaptive monotonicity by exhaustion.
pub fn check_adaptive_monotone(model: &Model, objective: &Objective) -> Result<CheckReport> {
    let psis = enumerate_partial_realizations(model)?;
    let mut witnesses = Vec::new();
    for psi in &psis {
        for item in 0..model.n_items() {
            if psi.observes(item) {
                continue;
            }
            let gain = expected_marginal_gain(model, objective, item, psi)?;
            if gain < -CHECK_TOL {
                witnesses.push(Witness {
                    psi: psi.clone(),
                    psi_prime: None,
                    item,
                    gain_at_psi: gain,
                    gain_at_psi_prime: None,
                });
            }
        }
    }
    witnesses.sort_by(|a, b| (&a.psi, a.item).cmp(&(&b.psi, b.item)));
    Ok(CheckReport::from_witnesses(witnesses))
}

/// Checks diminishing conditional gains: for every pair of
/// positive-probability partial realizations `ψ ⊆ ψ′` and every item `e`
/// unobserved in `ψ′`, `Δ(e | ψ) ≥ Δ(e | ψ′) - CHECK_TOL`.
pub fn check_adaptive_submodular(model: &Model, objective: &Objective) -> Result<CheckReport> {
    let psis = enumerate_partial_realizations(model)?;
    let n = model.n_items();

    // Gains for every (ψ, e) cell, NaN where e is observed.
    let mut gains: HashMap<PartialRealization, Vec<f64>> = HashMap::with_capacity(psis.len());
    for psi in &psis {
        let mut row = vec![f64::NAN; n];
        for (item, slot) in row.iter_mut().enumerate() {
            if !psi.observes(item) {
                *slot = expected_marginal_gain(model, objective, item, psi)?;
            }
        }
        gains.insert(psi.clone(), row);
    }

    let mut witnesses = Vec::new();
    for psi_prime in &psis {
        let dom: Vec<(usize, usize)> = psi_prime.iter().collect();
        let row_prime = &gains[psi_prime];
        // Every subrealization of ψ′ is a restriction to a subset of its
        // domain (agreement is forced), so iterate over domain subsets.
        for mask in 0..(1usize << dom.len()) {
            let psi = PartialRealization::from_pairs(
                dom.iter()
                    .enumerate()
                    .filter(|(j, _)| mask & (1 << j) != 0)
                    .map(|(_, &pair)| pair),
            );
            let row = &gains[&psi];
            for item in 0..n {
                if psi_prime.observes(item) {
                    continue;
                }
                let (g_coarse, g_fine) = (row[item], row_prime[item]);
                if g_coarse < g_fine - CHECK_TOL {
                    witnesses.push(Witness {
                        psi: psi.clone(),
                        psi_prime: Some(psi_prime.clone()),
                        item,
                        gain_at_psi: g_coarse,
                        gain_at_psi_prime: Some(g_fine),
                    });
                }
            }
        }
    }
    witnesses.sort_by(|a, b| {
        (&a.psi, &a.psi_prime, a.item).cmp(&(&b.psi, &b.psi_prime, b.item))
    });
    Ok(CheckReport::from_witnesses(witnesses))
}
