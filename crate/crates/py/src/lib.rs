//! Python bindings for the `adsub` library.
//!
//! Exposes the core types (Model, Objective, IndependenceSystem, Instance)
//! and the main operations: marginal gains, the adaptive-submodularity
//! checkers, exact p estimation, policy execution and evaluation, the
//! optimal-policy oracles, and the instance generators. Partial
//! realizations cross the boundary as `dict[int, int]`, realizations as
//! `list[int]`, and item sets as sorted `list[int]`.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use adsub::constraint as ct;
use adsub::instance as inst;
use adsub::model as md;
use adsub::objective as obj;
use adsub::oracle as orc;
use adsub::policy as pol;
use adsub::ItemSet;

fn to_py_err(e: adsub::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn item_set(items: Vec<usize>) -> ItemSet {
    items.into_iter().collect()
}

fn set_to_vec(set: &ItemSet) -> Vec<usize> {
    set.iter().copied().collect()
}

fn partial_from_dict(psi: BTreeMap<usize, usize>) -> md::PartialRealization {
    md::PartialRealization::from_pairs(psi)
}

fn partial_to_dict(psi: &md::PartialRealization) -> BTreeMap<usize, usize> {
    psi.iter().collect()
}

fn policy_config(
    policy: &str,
    stop_on_zero_gain: bool,
    tolerance: f64,
    seed: u64,
) -> PyResult<pol::PolicyConfig> {
    Ok(pol::PolicyConfig {
        kind: policy.parse().map_err(to_py_err)?,
        stop_on_zero_gain,
        tolerance,
        seed,
    })
}

/// Items with finite outcome spaces and independent priors.
#[pyclass(name = "Model", frozen, from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: md::Model,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (priors, item_labels=None, outcome_labels=None))]
    fn new(
        priors: Vec<Vec<f64>>,
        item_labels: Option<Vec<String>>,
        outcome_labels: Option<Vec<Vec<String>>>,
    ) -> PyResult<Self> {
        let inner =
            md::Model::with_labels(priors, item_labels, outcome_labels).map_err(to_py_err)?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn n_items(&self) -> usize {
        self.inner.n_items()
    }

    fn n_outcomes(&self, item: usize) -> usize {
        self.inner.n_outcomes(item)
    }

    fn priors(&self, item: usize) -> Vec<f64> {
        self.inner.priors_of(item).to_vec()
    }

    fn item_label(&self, item: usize) -> String {
        self.inner.item_label(item)
    }

    /// Outcome per item, sampled independently from the priors;
    /// deterministic in (model, seed).
    fn sample_realization(&self, seed: u64) -> Vec<usize> {
        self.inner.sample_realization(seed).outcomes().to_vec()
    }

    /// All realizations consistent with the observations, with conditional
    /// probabilities.
    fn enumerate_consistent(
        &self,
        psi: BTreeMap<usize, usize>,
    ) -> PyResult<Vec<(Vec<usize>, f64)>> {
        let worlds = self
            .inner
            .enumerate_consistent(&partial_from_dict(psi))
            .map_err(to_py_err)?;
        Ok(worlds
            .into_iter()
            .map(|(phi, w)| (phi.outcomes().to_vec(), w))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Model(n_items={})", self.inner.n_items())
    }
}

/// A pointwise objective f(S, phi).
#[pyclass(name = "Objective", frozen, from_py_object)]
#[derive(Clone)]
struct PyObjective {
    inner: obj::Objective,
}

#[pymethods]
impl PyObjective {
    /// Number of selected items with the given outcome.
    #[staticmethod]
    #[pyo3(signature = (success_outcome=0))]
    fn count(success_outcome: usize) -> Self {
        PyObjective {
            inner: obj::Objective::count(success_outcome),
        }
    }

    /// f(S, phi) = sum over selected items of weights[item][outcome].
    #[staticmethod]
    fn modular(weights: Vec<Vec<f64>>) -> Self {
        PyObjective {
            inner: obj::Objective::modular(weights),
        }
    }

    /// Universe elements covered by selected items whose outcome is 0.
    #[staticmethod]
    fn coverage(universe_size: usize, sets: Vec<Vec<usize>>) -> Self {
        PyObjective {
            inner: obj::Objective::coverage(universe_size, sets),
        }
    }

    /// 1 iff every listed item is selected with outcome 0.
    #[staticmethod]
    fn and_of(items: Vec<usize>) -> Self {
        PyObjective {
            inner: obj::Objective::and_of(items),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn evaluate(&self, selected: Vec<usize>, phi: Vec<usize>) -> PyResult<f64> {
        self.inner
            .evaluate(&item_set(selected), &md::Realization::new(phi))
            .map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Objective({})", self.inner.name())
    }
}

/// A downward-closed feasibility oracle over item sets.
#[pyclass(name = "IndependenceSystem", frozen, from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: ct::IndependenceSystem,
}

#[pymethods]
impl PySystem {
    /// Sets of size at most k.
    #[staticmethod]
    fn uniform(ground_size: usize, k: usize) -> Self {
        PySystem {
            inner: ct::IndependenceSystem::uniform(ground_size, k),
        }
    }

    /// At most capacities[b] items from blocks[b].
    #[staticmethod]
    fn partition(
        ground_size: usize,
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
    ) -> PyResult<Self> {
        let inner = ct::IndependenceSystem::partition(ground_size, &blocks, &capacities)
            .map_err(to_py_err)?;
        Ok(PySystem { inner })
    }

    /// Conjunction of several systems over the same ground.
    #[staticmethod]
    fn intersection(systems: Vec<PySystem>) -> PyResult<Self> {
        let inner =
            ct::IndependenceSystem::intersection(systems.into_iter().map(|s| s.inner).collect())
                .map_err(to_py_err)?;
        Ok(PySystem { inner })
    }

    #[getter]
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind_label()
    }

    fn is_independent(&self, items: Vec<usize>) -> PyResult<bool> {
        self.inner.is_independent(&item_set(items)).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("IndependenceSystem({})", self.inner.name())
    }
}

/// A bundled (model, objective, system) problem.
#[pyclass(name = "Instance", frozen, from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: inst::Instance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.inner.model.clone(),
        }
    }

    #[getter]
    fn objective(&self) -> PyObjective {
        PyObjective {
            inner: self.inner.objective.clone(),
        }
    }

    #[getter]
    fn system(&self) -> PySystem {
        PySystem {
            inner: self.inner.system.clone(),
        }
    }

    #[getter]
    fn declared_p(&self) -> Option<f64> {
        self.inner
            .declared_p
            .map(|p| *p.numer() as f64 / *p.denom() as f64)
    }

    #[getter]
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn __repr__(&self) -> String {
        format!("Instance({})", self.inner.name)
    }
}

/// Witness tuple: (psi, psi_prime or None, item, gain, refined gain or None).
type WitnessTuple = (
    BTreeMap<usize, usize>,
    Option<BTreeMap<usize, usize>>,
    usize,
    f64,
    Option<f64>,
);

/// Result of a checker run: `passed` plus violation witnesses.
#[pyclass(name = "CheckReport", frozen)]
struct PyCheckReport {
    #[pyo3(get)]
    passed: bool,
    #[pyo3(get)]
    witnesses: Vec<WitnessTuple>,
}

impl From<obj::CheckReport> for PyCheckReport {
    fn from(report: obj::CheckReport) -> Self {
        PyCheckReport {
            passed: report.passed,
            witnesses: report
                .witnesses
                .into_iter()
                .map(|w| {
                    (
                        partial_to_dict(&w.psi),
                        w.psi_prime.as_ref().map(partial_to_dict),
                        w.item,
                        w.gain_at_psi,
                        w.gain_at_psi_prime,
                    )
                })
                .collect(),
        }
    }
}

/// Exact independence parameter with its certifying witness.
#[pyclass(name = "PReport", frozen)]
struct PyPReport {
    #[pyo3(get)]
    p: f64,
    #[pyo3(get)]
    p_numer: u64,
    #[pyo3(get)]
    p_denom: u64,
    #[pyo3(get)]
    witness_set: Vec<usize>,
    #[pyo3(get)]
    witness_bases: (Vec<usize>, Vec<usize>),
}

/// One policy execution: ordered (item, outcome) steps and the final value.
#[pyclass(name = "PolicyTrace", frozen)]
struct PyTrace {
    #[pyo3(get)]
    steps: Vec<(usize, usize)>,
    #[pyo3(get)]
    final_value: f64,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.steps.iter().map(|&(item, _)| item).collect()
    }
}

/// Optimal adaptive policy value and search bookkeeping.
#[pyclass(name = "OracleResult", frozen)]
struct PyOracleResult {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    explored_states: usize,
    #[pyo3(get)]
    best_first_action: Option<usize>,
}

/// Exact conditional expected marginal gain of an item given observations.
#[pyfunction]
fn expected_marginal_gain(
    model: &PyModel,
    objective: &PyObjective,
    item: usize,
    psi: BTreeMap<usize, usize>,
) -> PyResult<f64> {
    obj::expected_marginal_gain(&model.inner, &objective.inner, item, &partial_from_dict(psi))
        .map_err(to_py_err)
}

/// Exhaustively checks that all conditional gains are nonnegative.
#[pyfunction]
fn check_adaptive_monotone(model: &PyModel, objective: &PyObjective) -> PyResult<PyCheckReport> {
    obj::check_adaptive_monotone(&model.inner, &objective.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

/// Exhaustively checks diminishing gains under observation refinement.
#[pyfunction]
fn check_adaptive_submodular(model: &PyModel, objective: &PyObjective) -> PyResult<PyCheckReport> {
    obj::check_adaptive_submodular(&model.inner, &objective.inner)
        .map(Into::into)
        .map_err(to_py_err)
}

/// Closure witness: (independent superset, rejected subset).
type ClosureWitness = Option<(Vec<usize>, Vec<usize>)>;

/// Verifies downward closure; returns (closed, witness or None).
#[pyfunction]
fn check_downward_closed(system: &PySystem) -> PyResult<(bool, ClosureWitness)> {
    let report = ct::check_downward_closed(&system.inner).map_err(to_py_err)?;
    Ok((report.closed, report.witness))
}

/// Exact independence parameter p by exhaustive enumeration.
#[pyfunction]
fn estimate_p(system: &PySystem) -> PyResult<PyPReport> {
    let report = ct::estimate_p(&system.inner).map_err(to_py_err)?;
    Ok(PyPReport {
        p: report.p_f64(),
        p_numer: *report.p_value.numer(),
        p_denom: *report.p_value.denom(),
        witness_set: report.witness_set,
        witness_bases: report.witness_bases,
    })
}

/// One adaptive greedy selection given the observations so far.
#[pyfunction]
#[pyo3(signature = (model, objective, system, psi, stop_on_zero_gain=true, tolerance=1e-9))]
fn greedy_step(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
    psi: BTreeMap<usize, usize>,
    stop_on_zero_gain: bool,
    tolerance: f64,
) -> PyResult<Option<usize>> {
    let config = pol::PolicyConfig {
        stop_on_zero_gain,
        tolerance,
        ..pol::PolicyConfig::default()
    };
    pol::greedy_step(
        &model.inner,
        &objective.inner,
        &system.inner,
        &partial_from_dict(psi),
        &config,
    )
    .map_err(to_py_err)
}

/// Runs a policy against a fixed realization.
#[pyfunction]
#[pyo3(signature = (model, objective, system, phi, policy="adaptive_greedy",
                    stop_on_zero_gain=true, tolerance=1e-9, seed=0))]
#[allow(clippy::too_many_arguments)]
fn execute_policy(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
    phi: Vec<usize>,
    policy: &str,
    stop_on_zero_gain: bool,
    tolerance: f64,
    seed: u64,
) -> PyResult<PyTrace> {
    let config = policy_config(policy, stop_on_zero_gain, tolerance, seed)?;
    let trace = pol::execute_policy(
        &model.inner,
        &objective.inner,
        &system.inner,
        &config,
        &md::Realization::new(phi),
    )
    .map_err(to_py_err)?;
    Ok(PyTrace {
        steps: trace.steps,
        final_value: trace.final_value,
    })
}

/// Exact expected policy value over all positive-probability worlds.
#[pyfunction]
#[pyo3(signature = (model, objective, system, policy="adaptive_greedy",
                    stop_on_zero_gain=true, tolerance=1e-9, seed=0))]
#[allow(clippy::too_many_arguments)]
fn expected_value_exact(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
    policy: &str,
    stop_on_zero_gain: bool,
    tolerance: f64,
    seed: u64,
) -> PyResult<f64> {
    let config = policy_config(policy, stop_on_zero_gain, tolerance, seed)?;
    pol::expected_value_exact(&model.inner, &objective.inner, &system.inner, &config)
        .map_err(to_py_err)
}

/// Seeded Monte Carlo estimate; returns (mean, standard error).
#[pyfunction]
#[pyo3(signature = (model, objective, system, samples, seed,
                    policy="adaptive_greedy", stop_on_zero_gain=true, tolerance=1e-9))]
#[allow(clippy::too_many_arguments)]
fn expected_value_monte_carlo(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
    samples: usize,
    seed: u64,
    policy: &str,
    stop_on_zero_gain: bool,
    tolerance: f64,
) -> PyResult<(f64, f64)> {
    let config = policy_config(policy, stop_on_zero_gain, tolerance, seed)?;
    pol::expected_value_monte_carlo(
        &model.inner,
        &objective.inner,
        &system.inner,
        &config,
        samples,
        seed,
    )
    .map_err(to_py_err)
}

/// The committed open-loop greedy set under unconditional expected gains.
#[pyfunction]
fn nonadaptive_greedy_set(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
) -> PyResult<Vec<usize>> {
    let config = pol::PolicyConfig::new(pol::PolicyKind::NonadaptiveGreedy);
    pol::nonadaptive_greedy_set(&model.inner, &objective.inner, &system.inner, &config)
        .map(|s| set_to_vec(&s))
        .map_err(to_py_err)
}

/// Exact optimal adaptive policy value by memoized decision-tree search.
#[pyfunction]
fn optimal_adaptive_value(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
) -> PyResult<PyOracleResult> {
    let result = orc::optimal_adaptive_value(&model.inner, &objective.inner, &system.inner)
        .map_err(to_py_err)?;
    Ok(PyOracleResult {
        value: result.value,
        explored_states: result.explored_states,
        best_first_action: result.best_first_action,
    })
}

/// Best committed set and its expected value; returns (value, set).
#[pyfunction]
fn optimal_nonadaptive_value(
    model: &PyModel,
    objective: &PyObjective,
    system: &PySystem,
) -> PyResult<(f64, Vec<usize>)> {
    orc::optimal_nonadaptive_value(&model.inner, &objective.inner, &system.inner)
        .map(|(value, set)| (value, set_to_vec(&set)))
        .map_err(to_py_err)
}

/// Stochastic coverage instance from (cover set, success probability) pairs.
#[pyfunction]
#[pyo3(signature = (universe_size, items, system=None))]
fn make_coverage(
    universe_size: usize,
    items: Vec<(Vec<usize>, f64)>,
    system: Option<PySystem>,
) -> PyResult<PyInstance> {
    inst::make_coverage(universe_size, &items, system.map(|s| s.inner))
        .map(|inner| PyInstance { inner })
        .map_err(to_py_err)
}

/// Bipartite matchmaking instance over all left x right pairs.
#[pyfunction]
#[pyo3(signature = (left, right, cap_left=1, cap_right=1, success_prob=0.5, success_probs=None))]
fn make_matchmaking(
    left: usize,
    right: usize,
    cap_left: usize,
    cap_right: usize,
    success_prob: f64,
    success_probs: Option<Vec<f64>>,
) -> PyResult<PyInstance> {
    let spec = inst::MatchmakingSpec {
        left_count: left,
        right_count: right,
        cap_left,
        cap_right,
        success_prob: match success_probs {
            Some(ps) => inst::PairProbs::PerPair(ps),
            None => inst::PairProbs::Uniform(success_prob),
        },
    };
    inst::make_matchmaking(&spec)
        .map(|inner| PyInstance { inner })
        .map_err(to_py_err)
}

/// Deterministic random coverage instance inside the checker/oracle caps.
#[pyfunction]
#[pyo3(signature = (seed, max_items=5, max_universe=6))]
fn random_small_instance(seed: u64, max_items: usize, max_universe: usize) -> PyInstance {
    let caps = inst::GeneratorCaps {
        max_items,
        max_universe,
    };
    PyInstance {
        inner: inst::random_small_instance(seed, &caps),
    }
}

#[pymodule]
fn adsub_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyObjective>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyCheckReport>()?;
    m.add_class::<PyPReport>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyOracleResult>()?;
    m.add_function(wrap_pyfunction!(expected_marginal_gain, m)?)?;
    m.add_function(wrap_pyfunction!(check_adaptive_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(check_adaptive_submodular, m)?)?;
    m.add_function(wrap_pyfunction!(check_downward_closed, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_step, m)?)?;
    m.add_function(wrap_pyfunction!(execute_policy, m)?)?;
    m.add_function(wrap_pyfunction!(expected_value_exact, m)?)?;
    m.add_function(wrap_pyfunction!(expected_value_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(nonadaptive_greedy_set, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_adaptive_value, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_nonadaptive_value, m)?)?;
    m.add_function(wrap_pyfunction!(make_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(make_matchmaking, m)?)?;
    m.add_function(wrap_pyfunction!(random_small_instance, m)?)?;
    Ok(())
}
