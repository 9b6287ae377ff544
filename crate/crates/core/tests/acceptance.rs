//! Acceptance suite: every guarantee the crate advertises, verified
//! end-to-end on small instances with exact oracles. Each test prints one
//! pass/fail line.

use std::time::Instant;

use adsub::constraint::{estimate_p, IndependenceSystem};
use adsub::instance::{
    make_matchmaking, random_small_instance, GeneratorCaps, Instance, MatchmakingSpec,
};
use adsub::model::{Model, PartialRealization, Realization};
use adsub::objective::{
    check_adaptive_submodular, enumerate_partial_realizations, expected_marginal_gain, Objective,
};
use adsub::oracle::{optimal_adaptive_value, optimal_nonadaptive_value};
use adsub::policy::{expected_value_exact, expected_value_monte_carlo, PolicyConfig};
use adsub::ItemSet;
use num_rational::Ratio;

const TOL: f64 = 1e-9;

fn suite() -> Vec<Instance> {
    let caps = GeneratorCaps::default();
    (0..20).map(|seed| random_small_instance(seed, &caps)).collect()
}

fn m1() -> Model {
    Model::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
}

fn report(name: &str, started: Instant, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "acceptance {name}: {verdict} ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
    assert!(failures.is_empty(), "{name} failures:\n{}", failures.join("\n"));
}

#[test]
fn criterion_1_p_independence_bound() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for instance in suite() {
        let report = check_adaptive_submodular(&instance.model, &instance.objective).unwrap();
        if !report.passed {
            failures.push(format!("{}: objective not adaptive submodular", instance.name));
            continue;
        }
        let p = estimate_p(&instance.system).unwrap().p_f64();
        let greedy = expected_value_exact(
            &instance.model,
            &instance.objective,
            &instance.system,
            &PolicyConfig::default(),
        )
        .unwrap();
        let opt = optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)
            .unwrap()
            .value;
        let bound = opt / (p + 1.0);
        if greedy < bound - TOL {
            failures.push(format!(
                "{}: greedy {greedy} < bound {bound} (p = {p}, opt = {opt})",
                instance.name
            ));
        }
    }
    report("1 (1/(p+1) bound on the random suite)", started, &failures);
}

#[test]
fn criterion_2_cardinality_bound() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut covered = 0;
    for instance in suite() {
        if instance.system.kind_label() != "uniform" {
            continue;
        }
        covered += 1;
        let greedy = expected_value_exact(
            &instance.model,
            &instance.objective,
            &instance.system,
            &PolicyConfig::default(),
        )
        .unwrap();
        let opt = optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)
            .unwrap()
            .value;
        let bound = (1.0 - (-1.0f64).exp()) * opt;
        if greedy < bound - TOL {
            failures.push(format!(
                "{}: greedy {greedy} < (1 - 1/e) * opt = {bound}",
                instance.name
            ));
        }
    }
    if covered == 0 {
        failures.push("no uniform-constrained instances in the suite".into());
    }
    report("2 ((1 - 1/e) bound under cardinality constraints)", started, &failures);
}

#[test]
fn criterion_3_matchmaking_bound() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let instance = make_matchmaking(&MatchmakingSpec::uniform(2, 2, 1, 1, 0.5)).unwrap();

    let p = estimate_p(&instance.system).unwrap().p_value;
    if p != Ratio::from_integer(2) {
        failures.push(format!("estimate_p = {p}, expected exactly 2"));
    }
    let greedy = expected_value_exact(
        &instance.model,
        &instance.objective,
        &instance.system,
        &PolicyConfig::default(),
    )
    .unwrap();
    let opt = optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)
        .unwrap()
        .value;
    if greedy < opt / 3.0 - TOL {
        failures.push(format!("greedy {greedy} < opt/3 = {}", opt / 3.0));
    }
    report("3 (matchmaking is a 1/3-approximation over a p=2 system)", started, &failures);
}

#[test]
fn criterion_4_checker_discrimination() {
    let started = Instant::now();
    let mut failures = Vec::new();

    if !check_adaptive_submodular(&m1(), &Objective::count(0)).unwrap().passed {
        failures.push("count objective rejected".into());
    }
    for instance in suite() {
        if !check_adaptive_submodular(&instance.model, &instance.objective).unwrap().passed {
            failures.push(format!("{}: coverage objective rejected", instance.name));
        }
    }
    let matchmaking = make_matchmaking(&MatchmakingSpec::uniform(2, 2, 1, 1, 0.5)).unwrap();
    if !check_adaptive_submodular(&matchmaking.model, &matchmaking.objective).unwrap().passed {
        failures.push("matchmaking objective rejected".into());
    }

    let and_report = check_adaptive_submodular(&m1(), &Objective::and_of(vec![0, 1])).unwrap();
    if and_report.passed {
        failures.push("and objective accepted".into());
    } else {
        let expected_psi = PartialRealization::empty();
        let expected_prime = PartialRealization::from_pairs([(0, 0)]);
        let found = and_report.witnesses.iter().any(|w| {
            w.psi == expected_psi
                && w.psi_prime.as_ref() == Some(&expected_prime)
                && w.item == 1
                && w.gain_at_psi.abs() < TOL
                && (w.gain_at_psi_prime.unwrap() - 0.5).abs() < TOL
        });
        if !found {
            failures.push(format!(
                "expected witness (∅, {{a→good}}, b, 0.0, 0.5) missing; got {:?}",
                and_report.witnesses.first()
            ));
        }
    }
    report("4 (checkers accept coverage and reject the and objective)", started, &failures);
}

#[test]
fn criterion_5_oracle_sanity_ordering() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for instance in suite() {
        let adaptive =
            optimal_adaptive_value(&instance.model, &instance.objective, &instance.system)
                .unwrap()
                .value;
        let (nonadaptive, _) =
            optimal_nonadaptive_value(&instance.model, &instance.objective, &instance.system)
                .unwrap();
        let greedy = expected_value_exact(
            &instance.model,
            &instance.objective,
            &instance.system,
            &PolicyConfig::default(),
        )
        .unwrap();
        if adaptive < nonadaptive - TOL {
            failures.push(format!(
                "{}: adaptive opt {adaptive} < nonadaptive opt {nonadaptive}",
                instance.name
            ));
        }
        if adaptive < greedy - TOL {
            failures.push(format!(
                "{}: adaptive opt {adaptive} < greedy {greedy}",
                instance.name
            ));
        }
    }
    report("5 (adaptive opt dominates committed opt and greedy)", started, &failures);
}

#[test]
fn criterion_6_estimator_consistency() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let caps = GeneratorCaps::default();
    for seed in 0..5 {
        let instance = random_small_instance(seed, &caps);
        let exact = expected_value_exact(
            &instance.model,
            &instance.objective,
            &instance.system,
            &PolicyConfig::default(),
        )
        .unwrap();
        let (mean, stderr) = expected_value_monte_carlo(
            &instance.model,
            &instance.objective,
            &instance.system,
            &PolicyConfig::default(),
            20_000,
            42,
        )
        .unwrap();
        if (mean - exact).abs() > 4.0 * stderr {
            failures.push(format!(
                "{}: |{mean} - {exact}| > 4 * {stderr}",
                instance.name
            ));
        }
    }
    report("6 (Monte Carlo mean within 4 stderr of exact)", started, &failures);
}

#[test]
fn criterion_7_matroid_p_exactness() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let one = Ratio::from_integer(1);

    for n in 1..=8usize {
        for k in 0..=n {
            let p = estimate_p(&IndependenceSystem::uniform(n, k)).unwrap().p_value;
            if p != one {
                failures.push(format!("uniform(n={n}, k={k}): p = {p}"));
            }
        }
        let partitions = [
            // Alternating two blocks with mixed capacities.
            IndependenceSystem::partition_by(
                (0..n).map(|i| Some(i % 2)).collect(),
                vec![1, 2],
            )
            .unwrap(),
            // Blocks of three, all capacity 1.
            IndependenceSystem::partition_by(
                (0..n).map(|i| Some(i / 3)).collect(),
                vec![1; n / 3 + 1],
            )
            .unwrap(),
            // One block holding everything, capacity roughly half.
            IndependenceSystem::partition_by(
                (0..n).map(|_| Some(0)).collect(),
                vec![(n / 2).max(1)],
            )
            .unwrap(),
        ];
        for (idx, matroid) in partitions.iter().enumerate() {
            let p = estimate_p(matroid).unwrap().p_value;
            if p != one {
                failures.push(format!("partition config {idx} (n={n}): p = {p}"));
            }
        }
    }

    // K_{2,2} matching system: edges e11=0, e12=1, e21=2, e22=3.
    let left = IndependenceSystem::partition(4, &[vec![0, 1], vec![2, 3]], &[1, 1]).unwrap();
    let right = IndependenceSystem::partition(4, &[vec![0, 2], vec![1, 3]], &[1, 1]).unwrap();
    let matching = IndependenceSystem::intersection(vec![left, right]).unwrap();
    let report_p = estimate_p(&matching).unwrap();
    if report_p.p_value != Ratio::from_integer(2) {
        failures.push(format!("K22 matching: p = {}", report_p.p_value));
    }
    if report_p.witness_set != vec![0, 1, 2] {
        failures.push(format!(
            "K22 matching witness {:?}, expected {{e11, e12, e21}}",
            report_p.witness_set
        ));
    }
    report("7 (matroids have p = 1, the K22 matching has p = 2)", started, &failures);
}

/// Independent gain oracle: enumerate every |outcomes|^n world under the
/// joint prior, filter to those consistent with psi, and normalize.
fn brute_force_gain(
    model: &Model,
    objective: &Objective,
    item: usize,
    psi: &PartialRealization,
) -> f64 {
    let n = model.n_items();
    let base: ItemSet = psi.domain().collect();
    let mut extended = base.clone();
    extended.insert(item);

    let mut numerator = 0.0;
    let mut total = 0.0;
    let mut outcomes = vec![0usize; n];
    loop {
        let phi = Realization::new(outcomes.clone());
        if psi.is_consistent_with(&phi) {
            let weight = model.probability(&phi);
            total += weight;
            let delta = objective.evaluate(&extended, &phi).unwrap()
                - objective.evaluate(&base, &phi).unwrap();
            numerator += weight * delta;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return numerator / total;
            }
            pos -= 1;
            outcomes[pos] += 1;
            if outcomes[pos] < model.n_outcomes(pos) {
                break;
            }
            outcomes[pos] = 0;
        }
    }
}

#[test]
fn criterion_8_gain_oracle_equivalence() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut covered = 0;
    for instance in suite() {
        if instance.ground_size() > 4 {
            continue;
        }
        covered += 1;
        for psi in enumerate_partial_realizations(&instance.model).unwrap() {
            for item in 0..instance.ground_size() {
                if psi.observes(item) {
                    continue;
                }
                let fast =
                    expected_marginal_gain(&instance.model, &instance.objective, item, &psi)
                        .unwrap();
                let brute = brute_force_gain(&instance.model, &instance.objective, item, &psi);
                if (fast - brute).abs() > 1e-12 {
                    failures.push(format!(
                        "{}: Δ({item} | {psi:?}) = {fast} vs brute force {brute}",
                        instance.name
                    ));
                }
            }
        }
    }
    if covered == 0 {
        failures.push("no instances with n ≤ 4 in the suite".into());
    }
    report("8 (marginal gains match the brute-force enumerator)", started, &failures);
}
