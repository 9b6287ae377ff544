//! Command-line front end: JSON instance files, experiment runs with CSV
//! records, and verification reports.
//!
//! # Instance files
//!
//! An instance file either spells out the three sections explicitly or
//! delegates to a generator stanza:
//!
//! ```json
//! {
//!   "name": "m1-count",
//!   "items": {
//!     "labels": ["a", "b"],
//!     "outcomes": [["good", "bad"], ["good", "bad"]],
//!     "probabilities": [[0.5, 0.5], [0.5, 0.5]]
//!   },
//!   "objective": { "kind": "count" },
//!   "constraint": { "kind": "uniform", "k": 1 }
//! }
//! ```
//!
//! ```json
//! { "generator": { "kind": "matchmaking", "left": 2, "right": 2,
//!                  "cap_left": 1, "cap_right": 1, "success_prob": 0.5 } }
//! ```
//!
//! Objective kinds: `count`, `modular`, `coverage`, `and`, `matchmaking`.
//! Constraint kinds: `uniform`, `partition`, `intersection`. Generator
//! kinds: `random_small`, `matchmaking`. `declared_p` is a `[numer, denom]`
//! pair. Every module invariant is enforced at load.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::constraint::{
    check_downward_closed, estimate_p, IndependenceSystem, SystemKind, P_ESTIMATION_CAP,
};
use crate::error::{Error, Result};
use crate::instance::{make_matchmaking, random_small_instance, GeneratorCaps, Instance, MatchmakingSpec, PairProbs};
use crate::model::Model;
use crate::objective::{
    check_adaptive_monotone, check_adaptive_submodular, Objective, ObjectiveKind,
};
use crate::oracle::{optimal_adaptive_value, optimal_nonadaptive_value};
use crate::policy::{
    expected_value_exact, expected_value_monte_carlo, PolicyConfig, PolicyKind,
};

/// Fixed CSV schema for experiment records.
pub const CSV_HEADER: &str =
    "instance,policy,p,opt_adaptive,opt_nonadaptive,policy_value,ratio,bound,eval_mode,samples,seed,runtime_ms";

// ---------------------------------------------------------------------------
// Instance file format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<Vec<String>>>,
    pub probabilities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_outcome: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<usize>>,
    /// Matchmaking objective: people counts mapping pair items to sides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacities: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub systems: Option<Vec<ConstraintSection>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_items: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_universe: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_probs: Option<Vec<f64>>,
}

/// On-disk JSON document describing an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<ItemsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_p: Option<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSection>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files are always serializable")
    }

    /// Expands the document into a validated [`Instance`]. Generator
    /// stanzas replace the explicit sections; every module invariant is
    /// enforced, wrapped as a validation error.
    pub fn build(&self) -> Result<Instance> {
        if let Some(generator) = &self.generator {
            let mut instance = build_generator(generator)?;
            if let Some(name) = &self.name {
                instance.name = name.clone();
            }
            instance.verify_declared_p().map_err(Error::validation)?;
            return Ok(instance);
        }

        let items = self.items.as_ref().ok_or_else(|| {
            Error::InvalidSpec("instance file needs an items section or a generator".into())
        })?;
        let objective_section = self.objective.as_ref().ok_or_else(|| {
            Error::InvalidSpec("instance file needs an objective section".into())
        })?;
        let constraint_section = self.constraint.as_ref().ok_or_else(|| {
            Error::InvalidSpec("instance file needs a constraint section".into())
        })?;

        let model = Model::with_labels(
            items.probabilities.clone(),
            items.labels.clone(),
            items.outcomes.clone(),
        )
        .map_err(Error::validation)?;
        let ground = model.n_items();
        let objective = build_objective(objective_section, ground)?;
        let system = build_constraint(constraint_section, ground).map_err(|e| match e {
            Error::UnknownConstraintKind { .. } => e,
            other => Error::validation(other),
        })?;
        let declared_p = self.declared_p.map(|(n, d)| Ratio::new(n, d.max(1)));

        let name = self.name.clone().unwrap_or_else(|| "instance".into());
        let instance = Instance::new(name, model, objective, system, declared_p)
            .map_err(Error::validation)?;
        instance.verify_declared_p().map_err(Error::validation)?;
        Ok(instance)
    }

    /// Serializes a built instance back into the document form. Custom
    /// objectives and membership predicates have no file representation.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        let model = &instance.model;
        let items = ItemsSection {
            labels: model.item_labels().map(|l| l.to_vec()),
            outcomes: model.outcome_labels().map(|l| l.to_vec()),
            probabilities: (0..model.n_items())
                .map(|i| model.priors_of(i).to_vec())
                .collect(),
        };
        Ok(InstanceFile {
            name: Some(instance.name.clone()),
            items: Some(items),
            objective: Some(objective_section(&instance.objective)?),
            constraint: Some(constraint_section(&instance.system)?),
            declared_p: instance.declared_p.map(|p| (*p.numer(), *p.denom())),
            generator: None,
        })
    }
}

fn build_generator(section: &GeneratorSection) -> Result<Instance> {
    match section.kind.as_str() {
        "random_small" => {
            let mut caps = GeneratorCaps::default();
            if let Some(m) = section.max_items {
                caps.max_items = m;
            }
            if let Some(u) = section.max_universe {
                caps.max_universe = u;
            }
            Ok(random_small_instance(section.seed.unwrap_or(0), &caps))
        }
        "matchmaking" => {
            let left = section.left.unwrap_or(0);
            let right = section.right.unwrap_or(0);
            let success_prob = match (&section.success_probs, section.success_prob) {
                (Some(ps), _) => PairProbs::PerPair(ps.clone()),
                (None, Some(p)) => PairProbs::Uniform(p),
                (None, None) => PairProbs::Uniform(0.5),
            };
            let spec = MatchmakingSpec {
                left_count: left,
                right_count: right,
                cap_left: section.cap_left.unwrap_or(1),
                cap_right: section.cap_right.unwrap_or(1),
                success_prob,
            };
            make_matchmaking(&spec).map_err(Error::validation)
        }
        other => Err(Error::UnknownGeneratorKind { kind: other.into() }),
    }
}

fn build_objective(section: &ObjectiveSection, ground: usize) -> Result<Objective> {
    match section.kind.as_str() {
        "count" => Ok(Objective::count(section.success_outcome.unwrap_or(0))),
        "modular" => {
            let weights = section.weights.clone().ok_or_else(|| {
                Error::InvalidSpec("modular objective needs weights".into())
            })?;
            Ok(Objective::modular(weights))
        }
        "coverage" => {
            let universe_size = section.universe_size.ok_or_else(|| {
                Error::InvalidSpec("coverage objective needs universe_size".into())
            })?;
            let sets = section.sets.clone().ok_or_else(|| {
                Error::InvalidSpec("coverage objective needs sets".into())
            })?;
            Ok(Objective::coverage(universe_size, sets))
        }
        "and" => {
            let items = section
                .items
                .clone()
                .unwrap_or_else(|| (0..ground).collect());
            Ok(Objective::and_of(items))
        }
        "matchmaking" => {
            let (Some(left), Some(right)) = (section.left, section.right) else {
                return Err(Error::InvalidSpec(
                    "matchmaking objective needs left and right counts".into(),
                ));
            };
            if left * right != ground {
                return Err(Error::InvalidSpec(format!(
                    "matchmaking objective over {left}x{right} pairs does not match {ground} items"
                )));
            }
            let covers = (0..ground).map(|pair| vec![pair / right, left + pair % right]).collect();
            Ok(Objective::coverage(left + right, covers).with_name("matched-people"))
        }
        other => Err(Error::UnknownObjectiveKind { kind: other.into() }),
    }
}

fn build_constraint(section: &ConstraintSection, ground: usize) -> Result<IndependenceSystem> {
    match section.kind.as_str() {
        "uniform" => {
            let k = section.k.ok_or_else(|| {
                Error::InvalidSpec("uniform constraint needs k".into())
            })?;
            Ok(IndependenceSystem::uniform(ground, k))
        }
        "partition" => {
            let blocks = section.blocks.clone().ok_or_else(|| {
                Error::InvalidSpec("partition constraint needs blocks".into())
            })?;
            let capacities = section.capacities.clone().ok_or_else(|| {
                Error::InvalidSpec("partition constraint needs capacities".into())
            })?;
            IndependenceSystem::partition(ground, &blocks, &capacities)
        }
        "intersection" => {
            let members = section.systems.as_ref().ok_or_else(|| {
                Error::InvalidSpec("intersection constraint needs systems".into())
            })?;
            let built = members
                .iter()
                .map(|m| build_constraint(m, ground))
                .collect::<Result<Vec<_>>>()?;
            IndependenceSystem::intersection(built)
        }
        other => Err(Error::UnknownConstraintKind { kind: other.into() }),
    }
}

fn objective_section(objective: &Objective) -> Result<ObjectiveSection> {
    let mut section = ObjectiveSection {
        kind: String::new(),
        success_outcome: None,
        weights: None,
        universe_size: None,
        sets: None,
        items: None,
        left: None,
        right: None,
    };
    match objective.kind() {
        ObjectiveKind::Count { success_outcome } => {
            section.kind = "count".into();
            section.success_outcome = Some(*success_outcome);
        }
        ObjectiveKind::Modular { weights } => {
            section.kind = "modular".into();
            section.weights = Some(weights.clone());
        }
        ObjectiveKind::Coverage {
            universe_size,
            covers,
            success_outcome,
        } => {
            section.kind = "coverage".into();
            section.universe_size = Some(*universe_size);
            section.sets = Some(covers.clone());
            section.success_outcome = Some(*success_outcome);
        }
        ObjectiveKind::And {
            items,
            success_outcome,
        } => {
            section.kind = "and".into();
            section.items = Some(items.clone());
            section.success_outcome = Some(*success_outcome);
        }
        ObjectiveKind::Custom(_) => return Err(Error::UnserializableCustom("objective")),
    }
    Ok(section)
}

fn constraint_section(system: &IndependenceSystem) -> Result<ConstraintSection> {
    let mut section = ConstraintSection {
        kind: String::new(),
        k: None,
        blocks: None,
        capacities: None,
        systems: None,
    };
    match system.kind() {
        SystemKind::Uniform { k } => {
            section.kind = "uniform".into();
            section.k = Some(*k);
        }
        SystemKind::Partition {
            block_of,
            capacities,
        } => {
            let mut blocks = vec![Vec::new(); capacities.len()];
            for (item, block) in block_of.iter().enumerate() {
                if let Some(b) = block {
                    blocks[*b].push(item);
                }
            }
            section.kind = "partition".into();
            section.blocks = Some(blocks);
            section.capacities = Some(capacities.clone());
        }
        SystemKind::Intersection(members) => {
            section.kind = "intersection".into();
            section.systems = Some(
                members
                    .iter()
                    .map(constraint_section)
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        SystemKind::Custom(_) => return Err(Error::UnserializableCustom("membership predicate")),
    }
    Ok(section)
}

/// Loads and validates an instance from a JSON file.
pub fn parse_instance(path: &Path) -> Result<Instance> {
    InstanceFile::from_path(path)?.build()
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// How the policy value is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

impl EvalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::MonteCarlo => "mc",
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EvalMode::Exact),
            "mc" => Ok(EvalMode::MonteCarlo),
            other => Err(Error::InvalidSpec(format!(
                "unknown eval mode {other:?} (expected exact or mc)"
            ))),
        }
    }
}

/// One experiment's outcome: the policy value, the certified p and bound,
/// and (when the oracle ran) the optimal denominators and achieved ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub instance_name: String,
    pub policy_kind: PolicyKind,
    pub p_value: Ratio<u64>,
    pub opt_adaptive: Option<f64>,
    pub opt_nonadaptive: Option<f64>,
    pub policy_value: f64,
    /// `policy_value / opt_adaptive`, defined as 1 when the optimum is 0.
    pub ratio: Option<f64>,
    /// The guarantee `1 / (p + 1)`.
    pub bound: Ratio<u64>,
    pub eval_mode: EvalMode,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub runtime_ms: u128,
}

/// RFC 4180 quoting for the free-text instance name; every other column is
/// machine-generated and comma-free.
fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Formats a real with 12 significant digits, shortest form.
fn fmt_real(x: f64) -> String {
    let rounded = crate::util::round_sig12(x);
    if rounded == 0.0 {
        return "0".to_string();
    }
    format!("{rounded}")
}

fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl ExperimentRecord {
    pub fn bound_f64(&self) -> f64 {
        ratio_to_f64(self.bound)
    }

    pub fn p_f64(&self) -> f64 {
        ratio_to_f64(self.p_value)
    }

    /// One CSV row under [`CSV_HEADER`]; absent optionals are empty fields.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_escape(&self.instance_name),
            self.policy_kind,
            fmt_real(self.p_f64()),
            opt(self.opt_adaptive),
            opt(self.opt_nonadaptive),
            fmt_real(self.policy_value),
            opt(self.ratio),
            fmt_real(self.bound_f64()),
            self.eval_mode,
            self.samples.map(|s| s.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.runtime_ms,
        )
    }
}

/// Runs one policy evaluation (and optionally the oracles) on an instance,
/// certifying p by exhaustive estimation whenever the ground allows it and
/// falling back to the declared value otherwise.
pub fn run_experiment(
    instance: &Instance,
    config: &PolicyConfig,
    eval_mode: EvalMode,
    samples: usize,
    seed: u64,
    with_oracle: bool,
) -> Result<ExperimentRecord> {
    let start = Instant::now();

    let p_value = if instance.ground_size() <= P_ESTIMATION_CAP {
        estimate_p(&instance.system)?.p_value
    } else {
        instance.declared_p.ok_or(Error::NoPAvailable)?
    };
    let bound = (p_value + Ratio::from_integer(1)).recip();

    let (policy_value, mc) = match eval_mode {
        EvalMode::Exact => (
            expected_value_exact(&instance.model, &instance.objective, &instance.system, config)?,
            None,
        ),
        EvalMode::MonteCarlo => {
            let (mean, _stderr) = expected_value_monte_carlo(
                &instance.model,
                &instance.objective,
                &instance.system,
                config,
                samples,
                seed,
            )?;
            (mean, Some((samples, seed)))
        }
    };

    let (opt_adaptive, opt_nonadaptive, ratio) = if with_oracle {
        let adaptive =
            optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)?;
        let (nonadaptive, _) =
            optimal_nonadaptive_value(&instance.model, &instance.objective, &instance.system)?;
        let ratio = if adaptive.value == 0.0 {
            1.0
        } else {
            policy_value / adaptive.value
        };
        (Some(adaptive.value), Some(nonadaptive), Some(ratio))
    } else {
        (None, None, None)
    };

    Ok(ExperimentRecord {
        instance_name: instance.name.clone(),
        policy_kind: config.kind,
        p_value,
        opt_adaptive,
        opt_nonadaptive,
        policy_value,
        ratio,
        bound,
        eval_mode,
        samples: mc.map(|(s, _)| s),
        seed: mc.map(|(_, s)| s),
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Appends a record to a CSV file, writing the header first when the file
/// is new. The file is replaced atomically (temp file + rename).
pub fn append_record(path: &Path, record: &ExperimentRecord) -> Result<()> {
    let mut content = match fs::read_to_string(path) {
        Ok(existing) => existing,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => format!("{CSV_HEADER}\n"),
        Err(e) => return Err(e.into()),
    };
    content.push_str(&record.csv_row());
    content.push('\n');

    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "adsub",
    version,
    about = "Adaptive greedy maximization over p-independence systems, with exact verification oracles"
)]
pub struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InstanceArg {
    /// Path to a JSON instance file.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a policy on an instance and emit an experiment record.
    Run {
        #[command(flatten)]
        instance: InstanceArg,
        /// adaptive_greedy | nonadaptive_greedy | random_feasible
        #[arg(long, default_value = "adaptive_greedy")]
        policy: String,
        /// exact | mc
        #[arg(long, default_value = "exact")]
        eval: String,
        /// Sample count for Monte Carlo evaluation.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Base seed for Monte Carlo evaluation and the random policy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compute the optimal adaptive and non-adaptive values.
        #[arg(long)]
        oracle: bool,
        /// CSV file to append the record to.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an instance: model invariants, downward closure, exact p,
    /// and both objective checkers.
    Check {
        #[command(flatten)]
        instance: InstanceArg,
    },
    /// Print the exact optimal adaptive policy value.
    Oracle {
        #[command(flatten)]
        instance: InstanceArg,
    },
}

fn cmd_run(
    path: &Path,
    policy: &str,
    eval: &str,
    samples: usize,
    seed: u64,
    oracle: bool,
    out: Option<&Path>,
) -> Result<()> {
    let instance = parse_instance(path)?;
    let config = PolicyConfig {
        kind: PolicyKind::from_str(policy)?,
        seed,
        ..PolicyConfig::default()
    };
    let eval_mode = EvalMode::from_str(eval)?;
    let record = run_experiment(&instance, &config, eval_mode, samples, seed, oracle)?;
    println!("{CSV_HEADER}");
    println!("{}", record.csv_row());
    if let Some(out) = out {
        append_record(out, &record)?;
    }
    Ok(())
}

fn cmd_check(path: &Path) -> Result<bool> {
    let instance = parse_instance(path)?;
    let model = &instance.model;
    println!("instance: {} ({} items)", instance.name, instance.ground_size());

    let mut all_ok = true;

    model.validate()?;
    println!("model: ok");

    let closure = check_downward_closed(&instance.system)?;
    if closure.closed {
        println!("downward_closed: ok");
    } else {
        all_ok = false;
        let (superset, subset) = closure.witness.expect("failed closure carries a witness");
        println!("downward_closed: FAIL ({superset:?} independent, {subset:?} rejected)");
    }

    if closure.closed {
        let report = estimate_p(&instance.system)?;
        println!(
            "p: {} (witness {:?}, bases {:?} / {:?})",
            report.p_value, report.witness_set, report.witness_bases.0, report.witness_bases.1
        );
        match instance.declared_p {
            Some(declared) if declared == report.p_value => {
                println!("declared_p: {declared} (confirmed)");
            }
            Some(declared) => {
                all_ok = false;
                println!("declared_p: {declared} MISMATCH (estimated {})", report.p_value);
            }
            None => {}
        }
    }

    let monotone = check_adaptive_monotone(model, &instance.objective)?;
    if monotone.passed {
        println!("adaptive_monotone: ok");
    } else {
        all_ok = false;
        let w = &monotone.witnesses[0];
        println!(
            "adaptive_monotone: FAIL ({} witnesses; first: item {} at {:?} gains {})",
            monotone.witnesses.len(),
            w.item,
            w.psi,
            w.gain_at_psi
        );
    }

    let submodular = check_adaptive_submodular(model, &instance.objective)?;
    if submodular.passed {
        println!("adaptive_submodular: ok");
    } else {
        all_ok = false;
        let w = &submodular.witnesses[0];
        println!(
            "adaptive_submodular: FAIL ({} witnesses; first: item {} gains {} at {:?} but {} at {:?})",
            submodular.witnesses.len(),
            w.item,
            w.gain_at_psi,
            w.psi,
            w.gain_at_psi_prime.unwrap_or(f64::NAN),
            w.psi_prime
        );
    }

    println!("check: {}", if all_ok { "PASS" } else { "FAIL" });
    Ok(all_ok)
}

fn cmd_oracle(path: &Path) -> Result<()> {
    let instance = parse_instance(path)?;
    let result =
        optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)?;
    println!("value: {}", fmt_real(result.value));
    println!("explored_states: {}", result.explored_states);
    match result.best_first_action {
        Some(item) => println!(
            "best_first_action: {} ({})",
            item,
            instance.model.item_label(item)
        ),
        None => println!("best_first_action: none"),
    }
    Ok(())
}

/// Exit code for an error: 2 for usage and file-syntax problems, 1 for
/// everything semantic.
fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Parse { .. } => 2,
        _ => 1,
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match CliArgs::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; keep its exit semantics
            // (0 for --help/--version, 2 for usage errors).
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let outcome = match &cli.command {
        Command::Run {
            instance,
            policy,
            eval,
            samples,
            seed,
            oracle,
            out,
        } => cmd_run(
            &instance.instance,
            policy,
            eval,
            *samples,
            *seed,
            *oracle,
            out.as_deref(),
        )
        .map(|()| true),
        Command::Check { instance } => cmd_check(&instance.instance),
        Command::Oracle { instance } => cmd_oracle(&instance.instance).map(|()| true),
    };

    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ItemSet;

    fn m1_file() -> InstanceFile {
        InstanceFile::from_json(
            r#"{
                "name": "m1-count",
                "items": {
                    "labels": ["a", "b"],
                    "outcomes": [["good", "bad"], ["good", "bad"]],
                    "probabilities": [[0.5, 0.5], [0.5, 0.5]]
                },
                "objective": { "kind": "count" },
                "constraint": { "kind": "uniform", "k": 1 }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn matchmaking_generator_file_builds_the_expected_instance() {
        let file = InstanceFile::from_json(
            r#"{ "generator": { "kind": "matchmaking", "left": 2, "right": 2,
                                "cap_left": 1, "cap_right": 1, "success_prob": 0.5 } }"#,
        )
        .unwrap();
        let instance = file.build().unwrap();
        assert_eq!(instance.ground_size(), 4);
        assert_eq!(instance.declared_p, Some(Ratio::from_integer(2)));
    }

    #[test]
    fn unknown_objective_kind_is_rejected() {
        let mut file = m1_file();
        file.objective.as_mut().unwrap().kind = "frobnicate".into();
        assert_eq!(
            file.build().unwrap_err(),
            Error::UnknownObjectiveKind {
                kind: "frobnicate".into()
            }
        );
    }

    #[test]
    fn bad_probabilities_fail_validation_at_load() {
        let mut file = m1_file();
        file.items.as_mut().unwrap().probabilities = vec![vec![0.6, 0.3], vec![0.5, 0.5]];
        let err = file.build().unwrap_err();
        let text = err.to_string();
        assert!(text.starts_with("validation failed:"), "{text}");
        assert!(text.contains("sum to 0.9"), "{text}");
    }

    #[test]
    fn malformed_json_reports_its_location() {
        let err = InstanceFile::from_json("{ not json").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn declared_p_mismatch_is_caught_at_load() {
        let mut file = m1_file();
        file.declared_p = Some((2, 1));
        let err = file.build().unwrap_err();
        assert!(err.to_string().contains("declared p"), "{err}");
    }

    #[test]
    fn round_trip_preserves_behavior() {
        let original = make_matchmaking(&MatchmakingSpec::uniform(2, 2, 1, 1, 0.5)).unwrap();
        let file = InstanceFile::from_instance(&original).unwrap();
        let reparsed = InstanceFile::from_json(&file.to_json()).unwrap().build().unwrap();

        assert_eq!(reparsed.name, original.name);
        assert_eq!(reparsed.model, original.model);
        assert_eq!(reparsed.declared_p, original.declared_p);
        let n = original.ground_size();
        for mask in 0..1usize << n {
            let s: ItemSet = (0..n).filter(|&e| mask & (1 << e) != 0).collect();
            assert_eq!(
                original.system.is_independent(&s).unwrap(),
                reparsed.system.is_independent(&s).unwrap(),
                "membership differs on {s:?}"
            );
        }
        for (phi, _) in original.model.enumerate_realizations() {
            for mask in 0..1usize << n {
                let s: ItemSet = (0..n).filter(|&e| mask & (1 << e) != 0).collect();
                assert_eq!(
                    original.objective.evaluate(&s, &phi).unwrap(),
                    reparsed.objective.evaluate(&s, &phi).unwrap()
                );
            }
        }
    }

    #[test]
    fn run_experiment_on_m1_certifies_the_bound() {
        let instance = m1_file().build().unwrap();
        let record = run_experiment(
            &instance,
            &PolicyConfig::default(),
            EvalMode::Exact,
            0,
            0,
            true,
        )
        .unwrap();
        assert!((record.policy_value - 0.5).abs() < 1e-12);
        assert_eq!(record.opt_adaptive, Some(0.5));
        assert_eq!(record.ratio, Some(1.0));
        assert_eq!(record.p_value, Ratio::from_integer(1));
        assert_eq!(record.bound, Ratio::new(1, 2));
    }

    #[test]
    fn matchmaking_experiment_meets_the_third_bound() {
        let instance = make_matchmaking(&MatchmakingSpec::uniform(2, 2, 1, 1, 0.5)).unwrap();
        let record = run_experiment(
            &instance,
            &PolicyConfig::default(),
            EvalMode::Exact,
            0,
            0,
            true,
        )
        .unwrap();
        assert_eq!(record.bound, Ratio::new(1, 3));
        assert!(record.ratio.unwrap() >= record.bound_f64() - 1e-9);
    }

    #[test]
    fn deterministic_single_item_instance_has_ratio_one() {
        let model = Model::new(vec![vec![1.0, 0.0]]).unwrap();
        let instance = Instance::new(
            "single",
            model,
            Objective::count(0),
            IndependenceSystem::uniform(1, 1),
            None,
        )
        .unwrap();
        let record = run_experiment(
            &instance,
            &PolicyConfig::default(),
            EvalMode::Exact,
            0,
            0,
            true,
        )
        .unwrap();
        assert_eq!(record.ratio, Some(1.0));
    }

    #[test]
    fn csv_rows_follow_the_fixed_schema() {
        let instance = m1_file().build().unwrap();
        let record = run_experiment(
            &instance,
            &PolicyConfig::default(),
            EvalMode::Exact,
            0,
            0,
            true,
        )
        .unwrap();
        let row = record.csv_row();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[0], "m1-count");
        assert_eq!(fields[1], "adaptive_greedy");
        assert_eq!(fields[2], "1");
        assert_eq!(fields[3], "0.5");
        assert_eq!(fields[5], "0.5");
        assert_eq!(fields[6], "1");
        assert_eq!(fields[7], "0.5");
        assert_eq!(fields[8], "exact");
        assert_eq!(fields[9], "");
        assert_eq!(fields[10], "");
    }

    #[test]
    fn absent_oracle_leaves_optional_fields_empty() {
        let instance = m1_file().build().unwrap();
        let record = run_experiment(
            &instance,
            &PolicyConfig::default(),
            EvalMode::Exact,
            0,
            0,
            false,
        )
        .unwrap();
        assert_eq!(record.opt_adaptive, None);
        assert_eq!(record.ratio, None);
        let row = record.csv_row();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[3], "");
        assert_eq!(fields[4], "");
        assert_eq!(fields[6], "");
    }

    #[test]
    fn instance_names_with_commas_are_quoted_in_csv() {
        assert_eq!(csv_escape("plain-name"), "plain-name");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn fmt_real_keeps_twelve_significant_digits() {
        assert_eq!(fmt_real(0.5), "0.5");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_real(2.0 / 3.0), "0.666666666667");
    }
}
