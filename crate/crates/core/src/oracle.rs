//! Exact optimal policy values by exhaustive decision-tree search,
//! providing the OPT denominators for approximation-ratio verification.
//!
//! The adaptive optimum satisfies the Bellman recursion
//!
//! ```text
//! V(ψ) = max( E[f(dom ψ, Φ) | ψ],
//!             max over feasible e ∉ dom ψ of Σ_o P(Φ(e) = o) · V(ψ ∪ {e→o}) )
//! ```
//!
//! where feasibility is membership of `dom(ψ) ∪ {e}` in the independence
//! system and outcome probabilities come straight from the per-item priors
//! (observations of other items carry no information under independent
//! priors). The explicit stop branch keeps the oracle correct even for
//! non-monotone test objectives. States are memoized on the canonical
//! encoding of `ψ`, and zero-probability outcome branches are skipped.

use std::collections::HashMap;

use crate::constraint::IndependenceSystem;
use crate::error::{Error, Result};
use crate::model::{Model, PartialRealization, Realization};
use crate::objective::Objective;
use crate::util::KahanSum;
use crate::ItemSet;

/// Instance-size limits for the adaptive oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleCaps {
    pub max_items: usize,
    pub max_outcomes: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_items: 7,
            max_outcomes: 3,
        }
    }
}

/// Cap on 2^n for the non-adaptive optimum's subset enumeration.
pub const NONADAPTIVE_GROUND_CAP: usize = 20;

/// Value and bookkeeping from one oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// Distinct partial realizations evaluated (memoization states).
    pub explored_states: usize,
    /// Optimal first selection, `None` when stopping immediately is best.
    pub best_first_action: Option<usize>,
}

struct Search<'a> {
    model: &'a Model,
    objective: &'a Objective,
    system: &'a IndependenceSystem,
    memo: HashMap<PartialRealization, f64>,
}

impl Search<'_> {
    /// Expected value of stopping at `psi`: `E[f(dom ψ, Φ) | ψ]`.
    fn stop_value(&self, psi: &PartialRealization) -> Result<f64> {
        let selected = psi.domain_set();
        let mut acc = KahanSum::new();
        self.model.for_each_consistent(psi, |outcomes, weight| {
            let phi = Realization::new(outcomes.to_vec());
            acc.add(weight * self.objective.eval_unchecked(&selected, &phi));
        })?;
        Ok(acc.total())
    }

    fn feasible(&self, selected: &ItemSet, e: usize) -> Result<bool> {
        let mut candidate = selected.clone();
        candidate.insert(e);
        self.system.is_independent(&candidate)
    }

    /// Expected continuation value of selecting `e` at `psi`.
    fn action_value(&mut self, psi: &PartialRealization, e: usize) -> Result<f64> {
        let mut acc = KahanSum::new();
        for o in 0..self.model.n_outcomes(e) {
            let p = self.model.prior(e, o);
            if p == 0.0 {
                continue;
            }
            let v = self.value(&psi.extended(e, o))?;
            acc.add(p * v);
        }
        Ok(acc.total())
    }

    fn value(&mut self, psi: &PartialRealization) -> Result<f64> {
        if let Some(&v) = self.memo.get(psi) {
            return Ok(v);
        }
        let selected = psi.domain_set();
        let mut best = self.stop_value(psi)?;
        for e in 0..self.model.n_items() {
            if psi.observes(e) || !self.feasible(&selected, e)? {
                continue;
            }
            let v = self.action_value(psi, e)?;
            if v > best {
                best = v;
            }
        }
        self.memo.insert(psi.clone(), best);
        Ok(best)
    }
}

/// Optimal adaptive policy value under the default caps (n ≤ 7, at most 3
/// outcomes per item).
pub fn optimal_adaptive_value(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
) -> Result<OracleResult> {
    optimal_adaptive_value_with_caps(model, objective, system, OracleCaps::default())
}

/// Optimal adaptive policy value with explicit instance-size caps.
pub fn optimal_adaptive_value_with_caps(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    caps: OracleCaps,
) -> Result<OracleResult> {
    let items = model.n_items();
    let outcomes = model.max_outcomes();
    if items > caps.max_items || outcomes > caps.max_outcomes {
        return Err(Error::OracleCapsExceeded {
            items,
            max_items: caps.max_items,
            outcomes,
            max_outcomes: caps.max_outcomes,
        });
    }
    if items != system.ground_size() {
        return Err(Error::MismatchedGroundSizes {
            left: items,
            right: system.ground_size(),
        });
    }

    let mut search = Search {
        model,
        objective,
        system,
        memo: HashMap::new(),
    };
    let root = PartialRealization::empty();
    let value = search.value(&root)?;

    // Re-derive the argmax at the root from the memoized children; ties and
    // the stop branch resolve to the smallest index / None via strict >.
    let mut best = search.stop_value(&root)?;
    let mut best_first_action = None;
    let empty = ItemSet::new();
    for e in 0..items {
        if !search.feasible(&empty, e)? {
            continue;
        }
        let v = search.action_value(&root, e)?;
        if v > best {
            best = v;
            best_first_action = Some(e);
        }
    }

    Ok(OracleResult {
        value,
        explored_states: search.memo.len(),
        best_first_action,
    })
}

/// Optimal committed-set value: maximizes `E_φ[f(S, φ)]` over all
/// independent sets by exhaustive enumeration. Returns the maximum and the
/// lexicographically smallest maximizing set.
pub fn optimal_nonadaptive_value(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
) -> Result<(f64, ItemSet)> {
    let n = model.n_items();
    if n > NONADAPTIVE_GROUND_CAP {
        return Err(Error::GroundTooLarge {
            ground: n,
            cap: NONADAPTIVE_GROUND_CAP,
        });
    }
    let worlds = model.world_count().unwrap_or(usize::MAX);
    if worlds > crate::policy::EVAL_WORLD_CAP {
        return Err(Error::EvalCapExceeded {
            worlds,
            cap: crate::policy::EVAL_WORLD_CAP,
        });
    }
    if n != system.ground_size() {
        return Err(Error::MismatchedGroundSizes {
            left: n,
            right: system.ground_size(),
        });
    }

    let realizations = model.enumerate_realizations();
    let mut best_value = f64::NEG_INFINITY;
    let mut best_set: Option<Vec<usize>> = None;
    for mask in 0..1usize << n {
        let set: ItemSet = (0..n).filter(|&e| mask & (1 << e) != 0).collect();
        if !system.is_independent(&set)? {
            continue;
        }
        let mut acc = KahanSum::new();
        for (phi, weight) in &realizations {
            acc.add(weight * objective.eval_unchecked(&set, phi));
        }
        let value = acc.total();
        let items: Vec<usize> = set.iter().copied().collect();
        let replace = match &best_set {
            None => true,
            Some(current) => value > best_value || (value == best_value && items < *current),
        };
        if replace {
            best_value = value;
            best_set = Some(items);
        }
    }
    let set = best_set.expect("the empty set is always independent");
    Ok((best_value, set.into_iter().collect()))
}
