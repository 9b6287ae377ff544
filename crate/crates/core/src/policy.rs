//! The adaptive greedy policy and its baselines, with closed-loop execution
//! against realizations and exact or Monte Carlo expected-value evaluation.
//!
//! Adaptive greedy repeatedly selects, among the items that keep the
//! selection independent, the one with the largest conditional expected
//! marginal gain given everything observed so far, then reveals the chosen
//! item's outcome and repeats. The non-adaptive baseline uses the same rule
//! with gains taken under the unconditioned prior, so it commits to the
//! same set in every world; the random baseline picks feasible items
//! uniformly at random from a seeded generator.

use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::IndependenceSystem;
use crate::error::{Error, Result};
use crate::model::{Model, PartialRealization, Realization};
use crate::objective::{expected_marginal_gain, Objective};
use crate::util::KahanSum;
use crate::ItemSet;

/// Cap on the number of full realizations exact evaluation will enumerate.
pub const EVAL_WORLD_CAP: usize = 100_000;

/// Selection rules available to [`execute_policy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    AdaptiveGreedy,
    NonadaptiveGreedy,
    RandomFeasible,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::AdaptiveGreedy => "adaptive_greedy",
            PolicyKind::NonadaptiveGreedy => "nonadaptive_greedy",
            PolicyKind::RandomFeasible => "random_feasible",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive_greedy" => Ok(PolicyKind::AdaptiveGreedy),
            "nonadaptive_greedy" => Ok(PolicyKind::NonadaptiveGreedy),
            "random_feasible" => Ok(PolicyKind::RandomFeasible),
            other => Err(Error::InvalidSpec(format!("unknown policy kind {other:?}"))),
        }
    }
}

/// Execution parameters shared by all policy kinds.
///
/// `seed` only drives the random baseline; greedy policies ignore it.
#[derive(Debug, Clone)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Stop as soon as the best available gain is within tolerance of zero.
    /// With `false` the policy fills up to a maximal independent set.
    pub stop_on_zero_gain: bool,
    /// Gains closer than this are ties (broken by smallest item index).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: PolicyKind::AdaptiveGreedy,
            stop_on_zero_gain: true,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        PolicyConfig {
            kind,
            ..Self::default()
        }
    }
}

/// The path one execution took: selections in order with the outcomes they
/// revealed, and the objective value in the driving realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTrace {
    pub steps: Vec<(usize, usize)>,
    pub final_value: f64,
}

impl PolicyTrace {
    pub fn selected(&self) -> ItemSet {
        self.steps.iter().map(|&(item, _)| item).collect()
    }
}

/// Items whose addition keeps the selection independent, ascending.
fn feasible_items(
    system: &IndependenceSystem,
    selected: &ItemSet,
    n_items: usize,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for e in 0..n_items {
        if selected.contains(&e) {
            continue;
        }
        let mut candidate = selected.clone();
        candidate.insert(e);
        if system.is_independent(&candidate)? {
            out.push(e);
        }
    }
    Ok(out)
}

/// Picks the best-gain feasible item: exact max over gains, then the
/// smallest index within `tolerance` of that max. `None` when nothing is
/// feasible or (under `stop_on_zero_gain`) nothing gains more than the
/// tolerance.
fn select_best<G>(
    candidates: &[usize],
    config: &PolicyConfig,
    mut gain_of: G,
) -> Result<Option<usize>>
where
    G: FnMut(usize) -> Result<f64>,
{
    if candidates.is_empty() {
        return Ok(None);
    }
    let gains: Vec<f64> = candidates
        .iter()
        .map(|&e| gain_of(e))
        .collect::<Result<_>>()?;
    let best = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if config.stop_on_zero_gain && best <= config.tolerance {
        return Ok(None);
    }
    let winner = candidates
        .iter()
        .zip(&gains)
        .find(|(_, &g)| g >= best - config.tolerance)
        .map(|(&e, _)| e);
    Ok(winner)
}

/// One adaptive greedy selection: among unobserved items that keep
/// `dom(psi)` independent, the one maximizing `Δ(e | psi)`, ties to the
/// smallest index. `None` when no feasible item remains or, with
/// `stop_on_zero_gain`, when the best gain is within tolerance of zero.
pub fn greedy_step(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    psi: &PartialRealization,
    config: &PolicyConfig,
) -> Result<Option<usize>> {
    let selected = psi.domain_set();
    let candidates = feasible_items(system, &selected, model.n_items())?;
    select_best(&candidates, config, |e| {
        expected_marginal_gain(model, objective, e, psi)
    })
}

/// Expected marginal gain of `e` on top of `selected` under the full prior,
/// ignoring all observations: `E_φ[f(S ∪ {e}, φ) − f(S, φ)]`.
fn unconditional_gain(
    model: &Model,
    objective: &Objective,
    selected: &ItemSet,
    e: usize,
) -> Result<f64> {
    let mut extended = selected.clone();
    extended.insert(e);
    let mut acc = KahanSum::new();
    model.for_each_consistent(&PartialRealization::empty(), |outcomes, weight| {
        let phi = Realization::new(outcomes.to_vec());
        let gain = objective.eval_unchecked(&extended, &phi)
            - objective.eval_unchecked(selected, &phi);
        acc.add(weight * gain);
    })?;
    Ok(acc.total())
}

fn nonadaptive_step(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    selected: &ItemSet,
    config: &PolicyConfig,
) -> Result<Option<usize>> {
    let candidates = feasible_items(system, selected, model.n_items())?;
    select_best(&candidates, config, |e| {
        unconditional_gain(model, objective, selected, e)
    })
}

/// Runs a policy to completion against the hidden realization `phi`,
/// revealing each selected item's outcome into the observation state. Every
/// prefix of the returned trace is independent in `system`.
pub fn execute_policy(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    config: &PolicyConfig,
    phi: &Realization,
) -> Result<PolicyTrace> {
    model.check_realization(phi)?;
    if model.n_items() != system.ground_size() {
        return Err(Error::MismatchedGroundSizes {
            left: model.n_items(),
            right: system.ground_size(),
        });
    }

    let mut rng = match config.kind {
        PolicyKind::RandomFeasible => Some(ChaCha8Rng::seed_from_u64(config.seed)),
        _ => None,
    };

    let mut psi = PartialRealization::empty();
    let mut steps = Vec::new();
    loop {
        let selected = psi.domain_set();
        let next = match config.kind {
            PolicyKind::AdaptiveGreedy => greedy_step(model, objective, system, &psi, config)?,
            PolicyKind::NonadaptiveGreedy => {
                nonadaptive_step(model, objective, system, &selected, config)?
            }
            PolicyKind::RandomFeasible => {
                let candidates = feasible_items(system, &selected, model.n_items())?;
                if candidates.is_empty() {
                    None
                } else {
                    let rng = rng.as_mut().expect("rng initialized for random policy");
                    Some(candidates[rng.random_range(0..candidates.len())])
                }
            }
        };
        let Some(item) = next else { break };

        let mut prefix = psi.domain_set();
        prefix.insert(item);
        assert!(
            system.is_independent(&prefix)?,
            "policy step proposed an infeasible item"
        );

        let outcome = phi.outcome(item);
        psi.observe(item, outcome)?;
        steps.push((item, outcome));
    }

    let selected = psi.domain_set();
    let final_value = objective.evaluate(&selected, phi)?;
    Ok(PolicyTrace { steps, final_value })
}

/// Exact expected objective value of the policy: the probability-weighted
/// sum of `execute_policy` values over every positive-probability world.
pub fn expected_value_exact(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    config: &PolicyConfig,
) -> Result<f64> {
    let worlds = model.world_count().unwrap_or(usize::MAX);
    if worlds > EVAL_WORLD_CAP {
        return Err(Error::EvalCapExceeded {
            worlds,
            cap: EVAL_WORLD_CAP,
        });
    }
    let mut acc = KahanSum::new();
    for (phi, weight) in model.enumerate_realizations() {
        let trace = execute_policy(model, objective, system, config, &phi)?;
        acc.add(weight * trace.final_value);
    }
    Ok(acc.total())
}

/// Monte Carlo estimate of the policy's expected value from `samples`
/// independent executions; per-sample seeds are `seed + index`, so the
/// result is a pure function of its inputs. Returns (mean, standard error).
pub fn expected_value_monte_carlo(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    config: &PolicyConfig,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::TooFewSamples(samples));
    }
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let phi = model.sample_realization(seed.wrapping_add(i as u64));
        let trace = execute_policy(model, objective, system, config, &phi)?;
        values.push(trace.final_value);
    }
    let mut sum = KahanSum::new();
    for &v in &values {
        sum.add(v);
    }
    let mean = sum.total() / samples as f64;
    let mut sq = KahanSum::new();
    for &v in &values {
        sq.add((v - mean) * (v - mean));
    }
    let stderr = (sq.total() / (samples as f64 * (samples as f64 - 1.0))).sqrt();
    Ok((mean, stderr))
}

/// Open-loop greedy: builds a committed set by repeatedly adding the
/// feasible item with the best unconditional expected gain, smallest-index
/// ties, stopping at zero gain (under the config flag) or infeasibility.
pub fn nonadaptive_greedy_set(
    model: &Model,
    objective: &Objective,
    system: &IndependenceSystem,
    config: &PolicyConfig,
) -> Result<ItemSet> {
    let worlds = model.world_count().unwrap_or(usize::MAX);
    if worlds > EVAL_WORLD_CAP {
        return Err(Error::EvalCapExceeded {
            worlds,
            cap: EVAL_WORLD_CAP,
        });
    }
    let mut selected = ItemSet::new();
    while let Some(item) = nonadaptive_step(model, objective, system, &selected, config)? {
        selected.insert(item);
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1() -> Model {
        Model::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn count() -> Objective {
        Objective::count(0)
    }

    fn uniform(k: usize) -> IndependenceSystem {
        IndependenceSystem::uniform(2, k)
    }

    #[test]
    fn greedy_step_breaks_ties_toward_the_smallest_index() {
        let step = greedy_step(
            &m1(),
            &count(),
            &uniform(1),
            &PartialRealization::empty(),
            &PolicyConfig::default(),
        )
        .unwrap();
        assert_eq!(step, Some(0));
    }

    #[test]
    fn greedy_step_stops_when_the_constraint_is_exhausted() {
        let psi = PartialRealization::from_pairs([(0, 0)]);
        let step = greedy_step(&m1(), &count(), &uniform(1), &psi, &PolicyConfig::default())
            .unwrap();
        assert_eq!(step, None);
    }

    #[test]
    fn greedy_step_stops_on_zero_gain() {
        let and = Objective::and_of(vec![0, 1]);
        let step = greedy_step(
            &m1(),
            &and,
            &uniform(2),
            &PartialRealization::empty(),
            &PolicyConfig::default(),
        )
        .unwrap();
        assert_eq!(step, None);
    }

    #[test]
    fn disabling_zero_gain_stop_fills_to_a_maximal_set() {
        let and = Objective::and_of(vec![0, 1]);
        let config = PolicyConfig {
            stop_on_zero_gain: false,
            ..PolicyConfig::default()
        };
        let trace = execute_policy(
            &m1(),
            &and,
            &uniform(2),
            &config,
            &Realization::new(vec![0, 0]),
        )
        .unwrap();
        assert_eq!(trace.selected().len(), 2);
        assert_eq!(trace.final_value, 1.0);
    }

    #[test]
    fn execution_records_the_revealed_outcomes() {
        let trace = execute_policy(
            &m1(),
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            &Realization::new(vec![0, 1]),
        )
        .unwrap();
        assert_eq!(trace.steps, vec![(0, 0)]);
        assert_eq!(trace.final_value, 1.0);

        let trace = execute_policy(
            &m1(),
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            &Realization::new(vec![1, 0]),
        )
        .unwrap();
        // The first pick cannot use observations, so it still takes item 0.
        assert_eq!(trace.steps, vec![(0, 1)]);
        assert_eq!(trace.final_value, 0.0);
    }

    #[test]
    fn degenerate_priors_steer_the_first_pick() {
        // Item 0 surely bad, item 1 surely good.
        let m = Model::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let trace = execute_policy(
            &m,
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            &Realization::new(vec![1, 0]),
        )
        .unwrap();
        assert_eq!(trace.steps, vec![(1, 0)]);
        assert_eq!(trace.final_value, 1.0);
    }

    #[test]
    fn exact_value_of_greedy_under_k1_is_half() {
        let v = expected_value_exact(&m1(), &count(), &uniform(1), &PolicyConfig::default())
            .unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_value_of_greedy_under_k2_is_one() {
        let v = expected_value_exact(&m1(), &count(), &uniform(2), &PolicyConfig::default())
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_family_scores_the_empty_set() {
        let v = expected_value_exact(&m1(), &count(), &uniform(0), &PolicyConfig::default())
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn exact_value_cap_is_enforced() {
        let m = Model::new(vec![vec![0.5, 0.5]; 17]).unwrap();
        let system = IndependenceSystem::uniform(17, 2);
        assert!(matches!(
            expected_value_exact(&m, &count(), &system, &PolicyConfig::default()).unwrap_err(),
            Error::EvalCapExceeded { .. }
        ));
    }

    #[test]
    fn deterministic_model_has_zero_monte_carlo_stderr() {
        let m = Model::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let system = IndependenceSystem::uniform(2, 2);
        let (mean, stderr) = expected_value_monte_carlo(
            &m,
            &count(),
            &system,
            &PolicyConfig::default(),
            100,
            3,
        )
        .unwrap();
        assert_eq!(stderr, 0.0);
        assert_eq!(mean, 2.0);
    }

    #[test]
    fn monte_carlo_tracks_the_exact_value() {
        let (mean, stderr) = expected_value_monte_carlo(
            &m1(),
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            10_000,
            7,
        )
        .unwrap();
        assert!(stderr > 0.0);
        assert!((mean - 0.5).abs() <= 3.0 * stderr, "mean {mean}, se {stderr}");
    }

    #[test]
    fn monte_carlo_is_deterministic_in_its_seed() {
        let a = expected_value_monte_carlo(
            &m1(),
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            100,
            11,
        )
        .unwrap();
        let b = expected_value_monte_carlo(
            &m1(),
            &count(),
            &uniform(1),
            &PolicyConfig::default(),
            100,
            11,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        assert!(matches!(
            expected_value_monte_carlo(
                &m1(),
                &count(),
                &uniform(1),
                &PolicyConfig::default(),
                1,
                0
            )
            .unwrap_err(),
            Error::TooFewSamples(1)
        ));
    }

    #[test]
    fn nonadaptive_greedy_set_matches_the_examples() {
        let config = PolicyConfig::new(PolicyKind::NonadaptiveGreedy);
        let s = nonadaptive_greedy_set(&m1(), &count(), &uniform(1), &config).unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![0]);

        let s = nonadaptive_greedy_set(&m1(), &count(), &uniform(2), &config).unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![0, 1]);

        let m = Model::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = nonadaptive_greedy_set(&m, &count(), &uniform(1), &config).unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn random_policy_is_deterministic_per_seed_and_fills_the_matroid() {
        let config = PolicyConfig {
            kind: PolicyKind::RandomFeasible,
            seed: 9,
            ..PolicyConfig::default()
        };
        let phi = Realization::new(vec![0, 1]);
        let a = execute_policy(&m1(), &count(), &uniform(2), &config, &phi).unwrap();
        let b = execute_policy(&m1(), &count(), &uniform(2), &config, &phi).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.selected().len(), 2);
    }

    #[test]
    fn traces_agree_with_the_driving_realization() {
        let phi = Realization::new(vec![1, 0]);
        let trace = execute_policy(
            &m1(),
            &count(),
            &uniform(2),
            &PolicyConfig::default(),
            &phi,
        )
        .unwrap();
        for (item, outcome) in trace.steps {
            assert_eq!(phi.outcome(item), outcome);
        }
    }
}
