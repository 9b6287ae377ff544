//! Adaptive greedy maximization of adaptive monotone submodular objectives
//! over p-independence systems, with exhaustive verification tooling.
//!
//! The crate models stochastic optimization problems where items carry
//! uncertain outcomes drawn from independent priors, a policy selects items
//! one at a time under an independence-system constraint while observing
//! each outcome as it goes, and the objective `f(S, φ)` is evaluated
//! pointwise on the realized world. On top of the [`policy`] module's
//! adaptive greedy (and its non-adaptive and random baselines) it ships the
//! machinery to *certify* the greedy guarantees empirically on small
//! instances:
//!
//! - exact conditional expected marginal gains and exhaustive checkers for
//!   adaptive monotonicity / adaptive submodularity ([`objective`]);
//! - uniform and partition matroids, intersections, downward-closure
//!   verification and exact brute-force estimation of the independence
//!   parameter p ([`constraint`]);
//! - an optimal-policy oracle by memoized decision-tree search plus the
//!   committed-set optimum, the denominators for approximation ratios
//!   ([`oracle`]);
//! - instance generators: stochastic coverage, bipartite matchmaking, and
//!   seeded random suites ([`instance`]);
//! - a CLI front end with JSON instance files and CSV experiment records
//!   ([`cli`]).

#![forbid(unsafe_code)]

pub mod cli;
pub mod constraint;
pub mod error;
pub mod instance;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod policy;
mod util;

pub use constraint::{
    check_downward_closed, estimate_p, DownwardClosure, IndependenceSystem, PReport,
};
pub use error::{Error, Result};
pub use instance::{
    make_coverage, make_matchmaking, random_small_instance, GeneratorCaps, Instance,
    MatchmakingSpec, PairProbs,
};
pub use model::{Model, PartialRealization, Realization};
pub use objective::{
    check_adaptive_monotone, check_adaptive_submodular, expected_marginal_gain, CheckReport,
    Objective, Witness,
};
pub use oracle::{
    optimal_adaptive_value, optimal_nonadaptive_value, OracleCaps, OracleResult,
};
pub use policy::{
    execute_policy, expected_value_exact, expected_value_monte_carlo, greedy_step,
    nonadaptive_greedy_set, PolicyConfig, PolicyKind, PolicyTrace,
};

/// A set of item indices; `BTreeSet` keeps iteration deterministic.
pub type ItemSet = std::collections::BTreeSet<usize>;
