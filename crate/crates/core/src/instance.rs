//! Instance generators: stochastic coverage, bipartite matchmaking, and
//! seeded random small instances for verification suites.

use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::{estimate_p, IndependenceSystem, P_ESTIMATION_CAP};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::objective::Objective;

/// A full problem: model, objective, and constraint over one ground set,
/// optionally with a declared independence parameter p.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub model: Model,
    pub objective: Objective,
    pub system: IndependenceSystem,
    pub declared_p: Option<Ratio<u64>>,
}

impl Instance {
    /// Assembles an instance, checking that the three parts agree on the
    /// ground set and that the objective's shape fits the model.
    pub fn new(
        name: impl Into<String>,
        model: Model,
        objective: Objective,
        system: IndependenceSystem,
        declared_p: Option<Ratio<u64>>,
    ) -> Result<Self> {
        if model.n_items() != system.ground_size() {
            return Err(Error::InconsistentInstance(format!(
                "model has {} items but the system ground has {}",
                model.n_items(),
                system.ground_size()
            )));
        }
        objective.check_arity(&model)?;
        if let Some(p) = declared_p {
            if *p.numer() == 0 {
                return Err(Error::InvalidSpec("declared_p must be positive".into()));
            }
        }
        Ok(Instance {
            name: name.into(),
            model,
            objective,
            system,
            declared_p,
        })
    }

    pub fn ground_size(&self) -> usize {
        self.model.n_items()
    }

    /// Cross-checks `declared_p` against exhaustive estimation when the
    /// ground is small enough; grounds beyond the cap are accepted as-is.
    pub fn verify_declared_p(&self) -> Result<()> {
        let Some(declared) = self.declared_p else {
            return Ok(());
        };
        if self.ground_size() > P_ESTIMATION_CAP {
            return Ok(());
        }
        let found = estimate_p(&self.system)?.p_value;
        if found != declared {
            return Err(Error::DeclaredPMismatch {
                declared: declared.to_string(),
                found: found.to_string(),
            });
        }
        Ok(())
    }
}

/// Per-pair success probabilities for matchmaking instances.
#[derive(Debug, Clone, PartialEq)]
pub enum PairProbs {
    Uniform(f64),
    /// One probability per (left, right) pair, row-major by left person.
    PerPair(Vec<f64>),
}

/// A bipartite matchmaking scenario: people on two sides, per-person limits
/// on arranged dates, and a success probability per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchmakingSpec {
    pub left_count: usize,
    pub right_count: usize,
    pub cap_left: usize,
    pub cap_right: usize,
    pub success_prob: PairProbs,
}

impl MatchmakingSpec {
    pub fn uniform(
        left_count: usize,
        right_count: usize,
        cap_left: usize,
        cap_right: usize,
        success_prob: f64,
    ) -> Self {
        MatchmakingSpec {
            left_count,
            right_count,
            cap_left,
            cap_right,
            success_prob: PairProbs::Uniform(success_prob),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.left_count == 0 || self.right_count == 0 {
            return Err(Error::InvalidSpec("matchmaking needs people on both sides".into()));
        }
        if self.cap_left == 0 || self.cap_right == 0 {
            return Err(Error::InvalidSpec("matchmaking caps must be at least 1".into()));
        }
        let pairs = self.left_count * self.right_count;
        match &self.success_prob {
            PairProbs::Uniform(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidSpec(format!(
                        "success probability {p} outside [0, 1]"
                    )));
                }
            }
            PairProbs::PerPair(ps) => {
                if ps.len() != pairs {
                    return Err(Error::InvalidSpec(format!(
                        "{} per-pair probabilities for {} pairs",
                        ps.len(),
                        pairs
                    )));
                }
                if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::InvalidSpec(format!(
                        "success probability {p} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn prob(&self, pair: usize) -> f64 {
        match &self.success_prob {
            PairProbs::Uniform(p) => *p,
            PairProbs::PerPair(ps) => ps[pair],
        }
    }
}

/// Stochastic set coverage: each item covers a fixed subset of the universe
/// but only *works* with its given probability; the objective counts the
/// universe elements covered by selected working items. The constraint
/// defaults to the trivial uniform matroid over the whole ground.
pub fn make_coverage(
    universe_size: usize,
    items: &[(Vec<usize>, f64)],
    system: Option<IndependenceSystem>,
) -> Result<Instance> {
    if items.is_empty() {
        return Err(Error::EmptyItemSet);
    }
    let mut priors = Vec::with_capacity(items.len());
    let mut covers = Vec::with_capacity(items.len());
    for (set, p) in items {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::InvalidSpec(format!(
                "success probability {p} outside [0, 1]"
            )));
        }
        if let Some(&bad) = set.iter().find(|&&u| u >= universe_size) {
            return Err(Error::InvalidSpec(format!(
                "coverage set element {bad} outside universe 0..{universe_size}"
            )));
        }
        priors.push(vec![*p, 1.0 - *p]);
        covers.push(set.clone());
    }
    let outcome_labels = Some(vec![vec!["works".into(), "fails".into()]; items.len()]);
    let model = Model::with_labels(priors, None, outcome_labels)?;
    let objective = Objective::coverage(universe_size, covers);
    let system = system.unwrap_or_else(|| IndependenceSystem::uniform(items.len(), items.len()));
    Instance::new(
        format!("coverage-u{universe_size}-n{}", items.len()),
        model,
        objective,
        system,
        None,
    )
}

/// Builds the bipartite matchmaking instance: one item per (left, right)
/// pair with outcomes {success, failure}, an objective counting the people
/// incident to at least one successful selected date, and the intersection
/// of the two per-person capacity matroids as the constraint. A date spends
/// both participants' capacity whether or not it succeeds, which is what
/// makes the constraint a 2-independence system over attempted pairs.
///
/// `declared_p` is 2 by default; on grounds small enough to enumerate, the
/// exhaustive estimate is authoritative and overrides it (with a warning)
/// when one side's matroid never binds.
pub fn make_matchmaking(spec: &MatchmakingSpec) -> Result<Instance> {
    spec.validate()?;
    let (l, r) = (spec.left_count, spec.right_count);
    let pairs = l * r;

    let mut priors = Vec::with_capacity(pairs);
    let mut labels = Vec::with_capacity(pairs);
    let mut covers = Vec::with_capacity(pairs);
    for li in 0..l {
        for ri in 0..r {
            let pair = li * r + ri;
            let p = spec.prob(pair);
            priors.push(vec![p, 1.0 - p]);
            labels.push(format!("u{li}-v{ri}"));
            // A successful date "covers" both people in the universe
            // {left people} ∪ {right people}.
            covers.push(vec![li, l + ri]);
        }
    }
    // Pair li*r + ri sits in left block li and right block ri.
    let left_blocks: Vec<Vec<usize>> = (0..l).map(|li| (li * r..(li + 1) * r).collect()).collect();
    let right_blocks: Vec<Vec<usize>> =
        (0..r).map(|ri| (0..l).map(|li| li * r + ri).collect()).collect();

    let outcome_labels = Some(vec![vec!["success".into(), "failure".into()]; pairs]);
    let model = Model::with_labels(priors, Some(labels), outcome_labels)?;
    let objective = Objective::coverage(l + r, covers).with_name("matched-people");
    let left = IndependenceSystem::partition(pairs, &left_blocks, &vec![spec.cap_left; l])?;
    let right = IndependenceSystem::partition(pairs, &right_blocks, &vec![spec.cap_right; r])?;
    let system = IndependenceSystem::intersection(vec![left, right])?;

    let declared_p = if pairs <= P_ESTIMATION_CAP {
        let found = estimate_p(&system)?.p_value;
        if found != Ratio::from_integer(2) {
            log::warn!(
                "matchmaking({l}x{r}, caps {}/{}): enumeration found p = {found}, overriding the declared 2",
                spec.cap_left,
                spec.cap_right
            );
        }
        found
    } else {
        Ratio::from_integer(2)
    };

    Instance::new(
        format!("matchmaking-{l}x{r}-caps-{}-{}", spec.cap_left, spec.cap_right),
        model,
        objective,
        system,
        Some(declared_p),
    )
}

/// Size limits for [`random_small_instance`]; the defaults stay inside the
/// checker and oracle caps.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorCaps {
    pub max_items: usize,
    pub max_universe: usize,
}

impl Default for GeneratorCaps {
    fn default() -> Self {
        GeneratorCaps {
            max_items: 5,
            max_universe: 6,
        }
    }
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> IndependenceSystem {
    let blocks = rng.random_range(1..=3.min(n));
    let block_of: Vec<Option<usize>> = (0..n).map(|_| Some(rng.random_range(0..blocks))).collect();
    let capacities: Vec<usize> = (0..blocks).map(|_| rng.random_range(1..=2)).collect();
    IndependenceSystem::partition_by(block_of, capacities)
        .expect("generated block ids are in range")
}

/// Deterministically generates a small stochastic-coverage instance with
/// binary outcomes: random cover sets, success probabilities quantized to
/// multiples of 0.05 (so no branch is degenerately unlikely), and a
/// constraint drawn from {uniform, partition, intersection of two
/// partitions}. The coverage objective is adaptive monotone submodular by
/// construction, and `declared_p` is filled in from exhaustive estimation.
pub fn random_small_instance(seed: u64, caps: &GeneratorCaps) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=caps.max_items.max(2));
    let universe = rng.random_range(2..=caps.max_universe.max(2));

    let items: Vec<(Vec<usize>, f64)> = (0..n)
        .map(|_| {
            let size = rng.random_range(1..=universe);
            let mut elements: Vec<usize> = (0..universe).collect();
            for j in 0..size {
                let swap = rng.random_range(j..universe);
                elements.swap(j, swap);
            }
            let mut cover = elements[..size].to_vec();
            cover.sort_unstable();
            let prob = 0.05 * rng.random_range(1..=19) as f64;
            (cover, prob)
        })
        .collect();

    let system = match rng.random_range(0..3) {
        0 => IndependenceSystem::uniform(n, rng.random_range(1..=n)),
        1 => random_partition(&mut rng, n),
        _ => IndependenceSystem::intersection(vec![
            random_partition(&mut rng, n),
            random_partition(&mut rng, n),
        ])
        .expect("partitions share the ground"),
    };

    let mut instance =
        make_coverage(universe, &items, Some(system)).expect("generated parts are valid");
    instance.name = format!("rand-{seed}");
    instance.declared_p = Some(
        estimate_p(&instance.system)
            .expect("generated grounds are under the estimation cap")
            .p_value,
    );
    instance
}
