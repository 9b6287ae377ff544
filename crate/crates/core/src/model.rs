//! Items, outcome spaces, independent priors, realizations and partial
//! realizations, with seeded sampling and consistent-world enumeration.
//!
//! A [`Model`] holds `n` items, each with a finite ordered outcome set and an
//! independent prior over those outcomes. A [`Realization`] assigns one
//! outcome to every item (a full world state); a [`PartialRealization`]
//! records the outcomes observed so far for a subset of the items.
//!
//! All types are immutable after construction and all operations are pure
//! functions of their inputs, so everything here is safe to share across
//! threads.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Absolute tolerance for "probabilities sum to one" checks.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

/// A ground set of items with independent per-item priors over finite
/// outcome spaces. Items and outcomes are dense indices; labels are
/// presentation-only metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    /// `priors[i][o]` is the probability that item `i` takes outcome `o`.
    priors: Vec<Vec<f64>>,
    item_labels: Option<Vec<String>>,
    outcome_labels: Option<Vec<Vec<String>>>,
}

impl Model {
    /// Builds a model from per-item outcome priors, validating all invariants.
    pub fn new(priors: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_labels(priors, None, None)
    }

    /// Builds a model with optional item and outcome labels.
    pub fn with_labels(
        priors: Vec<Vec<f64>>,
        item_labels: Option<Vec<String>>,
        outcome_labels: Option<Vec<Vec<String>>>,
    ) -> Result<Self> {
        let model = Model {
            priors,
            item_labels,
            outcome_labels,
        };
        model.validate()?;
        Ok(model)
    }

    /// Re-checks every model invariant, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.priors.is_empty() {
            return Err(Error::EmptyItemSet);
        }
        for (item, prior) in self.priors.iter().enumerate() {
            if prior.is_empty() {
                return Err(Error::EmptyOutcomeSet { item });
            }
            for (outcome, &p) in prior.iter().enumerate() {
                if p < 0.0 {
                    return Err(Error::NegativeProbability {
                        item,
                        outcome,
                        value: p,
                    });
                }
            }
            let sum: f64 = prior.iter().sum();
            if (sum - 1.0).abs() > PRIOR_SUM_TOL {
                return Err(Error::PriorSumMismatch {
                    item,
                    sum: crate::util::round_sig12(sum),
                });
            }
        }
        if let Some(labels) = &self.item_labels {
            if labels.len() != self.priors.len() {
                return Err(Error::InconsistentInstance(format!(
                    "{} item labels for {} items",
                    labels.len(),
                    self.priors.len()
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for label in labels {
                if !seen.insert(label) {
                    return Err(Error::DuplicateLabel {
                        label: label.clone(),
                    });
                }
            }
        }
        if let Some(outs) = &self.outcome_labels {
            if outs.len() != self.priors.len() {
                return Err(Error::InconsistentInstance(format!(
                    "{} outcome-label lists for {} items",
                    outs.len(),
                    self.priors.len()
                )));
            }
            for (item, labels) in outs.iter().enumerate() {
                if labels.len() != self.priors[item].len() {
                    return Err(Error::InconsistentInstance(format!(
                        "item {}: {} outcome labels for {} outcomes",
                        item,
                        labels.len(),
                        self.priors[item].len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.priors.len()
    }

    pub fn n_outcomes(&self, item: usize) -> usize {
        self.priors[item].len()
    }

    pub fn max_outcomes(&self) -> usize {
        self.priors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn prior(&self, item: usize, outcome: usize) -> f64 {
        self.priors[item][outcome]
    }

    pub fn priors_of(&self, item: usize) -> &[f64] {
        &self.priors[item]
    }

    pub fn item_labels(&self) -> Option<&[String]> {
        self.item_labels.as_deref()
    }

    pub fn outcome_labels(&self) -> Option<&[Vec<String>]> {
        self.outcome_labels.as_deref()
    }

    /// Label of an item, falling back to its index.
    pub fn item_label(&self, item: usize) -> String {
        match &self.item_labels {
            Some(labels) => labels[item].clone(),
            None => item.to_string(),
        }
    }

    /// Label of an outcome, falling back to its index.
    pub fn outcome_label(&self, item: usize, outcome: usize) -> String {
        match &self.outcome_labels {
            Some(labels) => labels[item][outcome].clone(),
            None => outcome.to_string(),
        }
    }

    /// Total number of full realizations, `Π_i |outcomes_i|`, or `None` on
    /// overflow.
    pub fn world_count(&self) -> Option<usize> {
        self.priors
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
    }

    /// Size bound used by the exhaustive checkers: `(max_outcomes + 1)^n`,
    /// or `None` on overflow.
    pub fn partial_state_bound(&self) -> Option<usize> {
        let base = self.max_outcomes() + 1;
        let mut acc = 1usize;
        for _ in 0..self.n_items() {
            acc = acc.checked_mul(base)?;
        }
        Some(acc)
    }

    /// Checks that a realization is total over this model with valid
    /// outcome indices.
    pub fn check_realization(&self, phi: &Realization) -> Result<()> {
        if phi.n_items() != self.n_items() {
            return Err(Error::InconsistentInstance(format!(
                "realization over {} items for a {}-item model",
                phi.n_items(),
                self.n_items()
            )));
        }
        for (item, &outcome) in phi.outcomes().iter().enumerate() {
            if outcome >= self.n_outcomes(item) {
                return Err(Error::OutcomeOutOfRange {
                    item,
                    outcome,
                    count: self.n_outcomes(item),
                });
            }
        }
        Ok(())
    }

    /// Checks that a partial realization only references valid items and
    /// outcomes of this model.
    pub fn check_partial(&self, psi: &PartialRealization) -> Result<()> {
        for (item, outcome) in psi.iter() {
            if item >= self.n_items() {
                return Err(Error::IndexOutOfRange {
                    index: item,
                    ground: self.n_items(),
                });
            }
            if outcome >= self.n_outcomes(item) {
                return Err(Error::OutcomeOutOfRange {
                    item,
                    outcome,
                    count: self.n_outcomes(item),
                });
            }
        }
        Ok(())
    }

    /// Prior probability of a full realization (product over items).
    pub fn probability(&self, phi: &Realization) -> f64 {
        self.priors
            .iter()
            .zip(phi.outcomes())
            .map(|(prior, &o)| prior[o])
            .product()
    }

    /// Prior probability of observing exactly `psi` on its domain.
    pub fn partial_probability(&self, psi: &PartialRealization) -> f64 {
        psi.iter().map(|(i, o)| self.priors[i][o]).product()
    }

    /// Draws a realization with each item's outcome sampled independently
    /// from its prior. Deterministic as a function of `(model, seed)`.
    pub fn sample_realization(&self, seed: u64) -> Realization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes = self
            .priors
            .iter()
            .map(|prior| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = prior.len() - 1;
                for (o, &p) in prior.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = o;
                        break;
                    }
                }
                chosen
            })
            .collect();
        Realization::new(outcomes)
    }

    /// Every positive-probability realization with its prior probability,
    /// in lexicographic (item index, outcome index) order.
    pub fn enumerate_realizations(&self) -> Vec<(Realization, f64)> {
        self.enumerate_consistent(&PartialRealization::empty())
            .expect("the empty observation is always consistent")
    }

    /// Every realization consistent with `psi`, paired with its conditional
    /// probability given `psi`. With independent priors this is the product
    /// over unobserved items of their prior entries; zero-probability worlds
    /// are omitted and the returned weights sum to one.
    pub fn enumerate_consistent(
        &self,
        psi: &PartialRealization,
    ) -> Result<Vec<(Realization, f64)>> {
        let mut worlds = Vec::new();
        self.for_each_consistent(psi, |outcomes, weight| {
            worlds.push((Realization::new(outcomes.to_vec()), weight));
        })?;
        Ok(worlds)
    }

    /// Streaming core of [`enumerate_consistent`](Self::enumerate_consistent):
    /// invokes `visit` once per consistent positive-probability world with a
    /// scratch outcome slice and the world's conditional weight.
    pub(crate) fn for_each_consistent<F>(
        &self,
        psi: &PartialRealization,
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(&[usize], f64),
    {
        self.check_partial(psi)?;
        for (item, outcome) in psi.iter() {
            if self.priors[item][outcome] == 0.0 {
                return Err(Error::ZeroProbabilityObservation { item, outcome });
            }
        }

        let n = self.n_items();
        // Positive-probability outcome choices for each unobserved item.
        let mut free: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut current: Vec<usize> = vec![0; n];
        for (i, slot) in current.iter_mut().enumerate() {
            match psi.outcome(i) {
                Some(o) => *slot = o,
                None => {
                    let outs: Vec<usize> = (0..self.n_outcomes(i))
                        .filter(|&o| self.priors[i][o] > 0.0)
                        .collect();
                    free.push((i, outs));
                }
            }
        }

        if free.is_empty() {
            visit(&current, 1.0);
            return Ok(());
        }

        // Odometer over free items: the last free item cycles fastest, so
        // worlds come out in lexicographic (item, outcome) order.
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut weight = 1.0;
            for (j, (item, outs)) in free.iter().enumerate() {
                let o = outs[idx[j]];
                current[*item] = o;
                weight *= self.priors[*item][o];
            }
            visit(&current, weight);

            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < free[pos].1.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// A total assignment of one outcome index to every item: the hidden world
/// state a policy runs against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    outcomes: Vec<usize>,
}

impl Realization {
    pub fn new(outcomes: Vec<usize>) -> Self {
        Realization { outcomes }
    }

    pub fn n_items(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome(&self, item: usize) -> usize {
        self.outcomes[item]
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }
}

/// The outcomes observed so far: a partial assignment over selected items.
///
/// Backed by a `BTreeMap` so iteration, ordering, and hashing are all
/// canonical in item order — partial realizations are used directly as memo
/// keys.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialRealization {
    observed: BTreeMap<usize, usize>,
}

impl PartialRealization {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        PartialRealization {
            observed: pairs.into_iter().collect(),
        }
    }

    /// Records an observation; observing the same item twice is an error.
    pub fn observe(&mut self, item: usize, outcome: usize) -> Result<()> {
        if self.observed.contains_key(&item) {
            return Err(Error::ItemAlreadyObserved { item });
        }
        self.observed.insert(item, outcome);
        Ok(())
    }

    /// Copy of `self` extended with one more observation.
    pub fn extended(&self, item: usize, outcome: usize) -> Self {
        let mut next = self.clone();
        next.observed.insert(item, outcome);
        next
    }

    pub fn outcome(&self, item: usize) -> Option<usize> {
        self.observed.get(&item).copied()
    }

    pub fn observes(&self, item: usize) -> bool {
        self.observed.contains_key(&item)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed.keys().copied()
    }

    pub fn domain_set(&self) -> crate::ItemSet {
        self.observed.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observed.iter().map(|(&i, &o)| (i, o))
    }

    /// True iff `phi` agrees with every observation in `self`.
    pub fn is_consistent_with(&self, phi: &Realization) -> bool {
        self.iter().all(|(i, o)| phi.outcome(i) == o)
    }

    /// True iff `self` is a subrealization of `other`: its domain is
    /// contained in `other`'s and the two agree on it.
    pub fn is_subrealization_of(&self, other: &Self) -> bool {
        self.iter().all(|(i, o)| other.outcome(i) == Some(o))
    }
}
