//! Independence systems as membership oracles: uniform and partition
//! matroids, intersections, and brute-force structural verification
//! (downward closure, exact estimation of the independence parameter p).
//!
//! A family is a p-independence system when, inside any subset `S` of the
//! ground set, the sizes of any two maximal independent subsets of `S`
//! differ by a factor of at most `p` (the maximal-set-ratio definition).
//! Matroids have `p = 1`; the intersection of `p` matroids is a
//! p-independence system. [`estimate_p`] computes `p` exactly on small
//! grounds by double enumeration, which is what makes the `1/(p+1)` bound
//! reported elsewhere in this crate trustworthy end to end.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::ItemSet;

/// Largest ground for the 2^n downward-closure check.
pub const DOWNWARD_CLOSURE_CAP: usize = 20;

/// Largest ground for the 3^n exact p estimation.
pub const P_ESTIMATION_CAP: usize = 12;

type MembershipFn = dyn Fn(&ItemSet) -> bool + Send + Sync;

#[derive(Clone)]
pub(crate) enum SystemKind {
    Uniform {
        k: usize,
    },
    Partition {
        /// Block id per item; `None` leaves the item unconstrained.
        block_of: Vec<Option<usize>>,
        capacities: Vec<usize>,
    },
    Intersection(Vec<IndependenceSystem>),
    Custom(Arc<MembershipFn>),
}

/// A downward-closed family of feasible selection sets over a fixed ground,
/// given by a deterministic membership oracle. The empty set is always
/// independent for every built-in constructor.
#[derive(Clone)]
pub struct IndependenceSystem {
    name: String,
    ground_size: usize,
    kind: SystemKind,
}

impl fmt::Debug for IndependenceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndependenceSystem")
            .field("name", &self.name)
            .field("ground_size", &self.ground_size)
            .field("kind", &self.kind_label())
            .finish()
    }
}

impl IndependenceSystem {
    /// Uniform matroid: independent iff `|S| ≤ k`.
    pub fn uniform(ground_size: usize, k: usize) -> Self {
        IndependenceSystem {
            name: format!("uniform(k={k})"),
            ground_size,
            kind: SystemKind::Uniform { k },
        }
    }

    /// Partition matroid from explicit blocks. Items outside every block are
    /// unconstrained.
    pub fn partition(
        ground_size: usize,
        blocks: &[Vec<usize>],
        capacities: &[usize],
    ) -> Result<Self> {
        if blocks.len() != capacities.len() {
            return Err(Error::InvalidSpec(format!(
                "{} blocks but {} capacities",
                blocks.len(),
                capacities.len()
            )));
        }
        let mut block_of = vec![None; ground_size];
        for (b, block) in blocks.iter().enumerate() {
            for &item in block {
                if item >= ground_size {
                    return Err(Error::IndexOutOfRange {
                        index: item,
                        ground: ground_size,
                    });
                }
                if block_of[item].is_some() {
                    return Err(Error::InvalidSpec(format!(
                        "item {item} appears in more than one block"
                    )));
                }
                block_of[item] = Some(b);
            }
        }
        Ok(IndependenceSystem {
            name: format!("partition({} blocks)", blocks.len()),
            ground_size,
            kind: SystemKind::Partition {
                block_of,
                capacities: capacities.to_vec(),
            },
        })
    }

    /// Partition matroid from a per-item block assignment.
    pub fn partition_by(
        block_of: Vec<Option<usize>>,
        capacities: Vec<usize>,
    ) -> Result<Self> {
        if let Some(bad) = block_of.iter().flatten().find(|&&b| b >= capacities.len()) {
            return Err(Error::InvalidSpec(format!(
                "block id {bad} out of range for {} capacities",
                capacities.len()
            )));
        }
        Ok(IndependenceSystem {
            name: format!("partition({} blocks)", capacities.len()),
            ground_size: block_of.len(),
            kind: SystemKind::Partition {
                block_of,
                capacities,
            },
        })
    }

    /// Conjunction of several systems over the same ground.
    pub fn intersection(systems: Vec<IndependenceSystem>) -> Result<Self> {
        let Some(first) = systems.first() else {
            return Err(Error::EmptyIntersection);
        };
        let ground_size = first.ground_size;
        for s in &systems {
            if s.ground_size != ground_size {
                return Err(Error::MismatchedGroundSizes {
                    left: ground_size,
                    right: s.ground_size,
                });
            }
        }
        let name = systems
            .iter()
            .map(|s| s.name.clone())
            .collect::<Vec<_>>()
            .join(" ∩ ");
        Ok(IndependenceSystem {
            name,
            ground_size,
            kind: SystemKind::Intersection(systems),
        })
    }

    /// Wraps an arbitrary membership predicate.
    pub fn custom<F>(name: impl Into<String>, ground_size: usize, membership: F) -> Self
    where
        F: Fn(&ItemSet) -> bool + Send + Sync + 'static,
    {
        IndependenceSystem {
            name: name.into(),
            ground_size,
            kind: SystemKind::Custom(Arc::new(membership)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    /// Short tag for the membership rule family.
    pub fn kind_label(&self) -> &'static str {
        match &self.kind {
            SystemKind::Uniform { .. } => "uniform",
            SystemKind::Partition { .. } => "partition",
            SystemKind::Intersection(_) => "intersection",
            SystemKind::Custom(_) => "custom",
        }
    }

    pub(crate) fn kind(&self) -> &SystemKind {
        &self.kind
    }

    /// Membership oracle with index-range checking.
    pub fn is_independent(&self, s: &ItemSet) -> Result<bool> {
        if let Some(&bad) = s.iter().find(|&&e| e >= self.ground_size) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                ground: self.ground_size,
            });
        }
        Ok(self.indep_unchecked(s))
    }

    pub(crate) fn indep_unchecked(&self, s: &ItemSet) -> bool {
        match &self.kind {
            SystemKind::Uniform { k } => s.len() <= *k,
            SystemKind::Partition {
                block_of,
                capacities,
            } => {
                let mut counts = vec![0usize; capacities.len()];
                for &e in s {
                    if let Some(b) = block_of[e] {
                        counts[b] += 1;
                        if counts[b] > capacities[b] {
                            return false;
                        }
                    }
                }
                true
            }
            SystemKind::Intersection(systems) => systems.iter().all(|m| m.indep_unchecked(s)),
            SystemKind::Custom(membership) => membership(s),
        }
    }
}

fn mask_to_set(mask: usize) -> ItemSet {
    let mut s = ItemSet::new();
    let mut bits = mask;
    while bits != 0 {
        let e = bits.trailing_zeros() as usize;
        s.insert(e);
        bits &= bits - 1;
    }
    s
}

fn mask_to_vec(mask: usize) -> Vec<usize> {
    mask_to_set(mask).into_iter().collect()
}

/// Membership table over all 2^n subsets, indexed by bitmask.
fn membership_table(system: &IndependenceSystem) -> Vec<bool> {
    let n = system.ground_size;
    (0..1usize << n)
        .map(|mask| system.indep_unchecked(&mask_to_set(mask)))
        .collect()
}

/// Outcome of the exhaustive downward-closure check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownwardClosure {
    pub closed: bool,
    /// On failure: (independent superset, rejected subset).
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

/// Verifies that every subset of every independent set is independent, by
/// 2^n enumeration. On failure returns the first offending superset (in
/// mask order) with its lexicographically smallest rejected one-element
/// deletion.
pub fn check_downward_closed(system: &IndependenceSystem) -> Result<DownwardClosure> {
    let n = system.ground_size;
    if n > DOWNWARD_CLOSURE_CAP {
        return Err(Error::GroundTooLarge {
            ground: n,
            cap: DOWNWARD_CLOSURE_CAP,
        });
    }
    let table = membership_table(system);
    for mask in 0..table.len() {
        if !table[mask] {
            continue;
        }
        let mut violations: Vec<Vec<usize>> = Vec::new();
        let mut bits = mask;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let sub = mask & !(1 << e);
            if !table[sub] {
                violations.push(mask_to_vec(sub));
            }
        }
        if let Some(smallest) = violations.into_iter().min() {
            return Ok(DownwardClosure {
                closed: false,
                witness: Some((mask_to_vec(mask), smallest)),
            });
        }
    }
    Ok(DownwardClosure {
        closed: true,
        witness: None,
    })
}

/// Certificate for the independence parameter p: the subset and pair of
/// maximal independent subsets realizing the worst size ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PReport {
    pub p_value: Ratio<u64>,
    pub witness_set: Vec<usize>,
    /// (largest, smallest) maximal independent subsets of the witness set.
    pub witness_bases: (Vec<usize>, Vec<usize>),
}

impl PReport {
    pub fn p_f64(&self) -> f64 {
        *self.p_value.numer() as f64 / *self.p_value.denom() as f64
    }
}

/// Computes the exact independence parameter p by enumerating, for every
/// subset `S` of the ground set, all maximal independent subsets of `S`.
/// `p` is the largest ratio (largest maximal size)/(smallest maximal size);
/// a subset whose only maximal independent subset is empty contributes
/// ratio 1. Ties keep the lexicographically smallest witness subset.
pub fn estimate_p(system: &IndependenceSystem) -> Result<PReport> {
    let n = system.ground_size;
    if n > P_ESTIMATION_CAP {
        return Err(Error::GroundTooLarge {
            ground: n,
            cap: P_ESTIMATION_CAP,
        });
    }
    let closure = check_downward_closed(system)?;
    if let Some((superset, subset)) = closure.witness {
        return Err(Error::NotDownwardClosed { superset, subset });
    }

    let table = membership_table(system);
    let maximal_in = |sub: usize, s_mask: usize| -> bool {
        let mut rest = s_mask & !sub;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if table[sub | (1 << e)] {
                return false;
            }
        }
        true
    };

    let mut best: Option<PReport> = None;
    for s_mask in 0..1usize << n {
        // Largest / smallest maximal independent subsets of S, breaking
        // size ties toward the lexicographically smallest set.
        let mut largest: Option<(usize, Vec<usize>)> = None;
        let mut smallest: Option<(usize, Vec<usize>)> = None;
        let mut sub = s_mask;
        loop {
            if table[sub] && maximal_in(sub, s_mask) {
                let size = sub.count_ones() as usize;
                let items = mask_to_vec(sub);
                let replace_largest = match &largest {
                    None => true,
                    Some((sz, v)) => size > *sz || (size == *sz && items < *v),
                };
                if replace_largest {
                    largest = Some((size, items.clone()));
                }
                let replace_smallest = match &smallest {
                    None => true,
                    Some((sz, v)) => size < *sz || (size == *sz && items < *v),
                };
                if replace_smallest {
                    smallest = Some((size, items));
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s_mask;
        }

        let (max_sz, max_items) = largest.expect("the empty set is always independent");
        let (min_sz, min_items) = smallest.expect("the empty set is always independent");
        // Downward closure rules out a nonempty maximal set coexisting with
        // an empty one, so min_sz == 0 implies max_sz == 0.
        debug_assert!(min_sz > 0 || max_sz == 0);
        let ratio = if min_sz == 0 {
            Ratio::from_integer(1)
        } else {
            Ratio::new(max_sz as u64, min_sz as u64)
        };

        let candidate = PReport {
            p_value: ratio,
            witness_set: mask_to_vec(s_mask),
            witness_bases: (max_items, min_items),
        };
        let replace = match &best {
            None => true,
            Some(b) => {
                candidate.p_value > b.p_value
                    || (candidate.p_value == b.p_value && candidate.witness_set < b.witness_set)
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    Ok(best.expect("ground sets have at least the empty subset"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    /// K_{2,2} matching system over edges e11=0, e12=1, e21=2, e22=3
    /// (edge l*2+r joins left l and right r), as the intersection of the
    /// two endpoint-capacity partition matroids.
    fn k22_matching() -> IndependenceSystem {
        let left = IndependenceSystem::partition(4, &[vec![0, 1], vec![2, 3]], &[1, 1]).unwrap();
        let right = IndependenceSystem::partition(4, &[vec![0, 2], vec![1, 3]], &[1, 1]).unwrap();
        IndependenceSystem::intersection(vec![left, right]).unwrap()
    }

    #[test]
    fn uniform_matroid_enforces_cardinality() {
        let u = IndependenceSystem::uniform(2, 1);
        assert!(u.is_independent(&set(&[0])).unwrap());
        assert!(!u.is_independent(&set(&[0, 1])).unwrap());
        assert!(u.is_independent(&set(&[])).unwrap());
    }

    #[test]
    fn matching_system_rejects_shared_endpoints() {
        let m = k22_matching();
        assert!(m.is_independent(&set(&[0, 3])).unwrap());
        assert!(!m.is_independent(&set(&[0, 1])).unwrap());
        assert!(m.is_independent(&set(&[])).unwrap());
    }

    #[test]
    fn out_of_range_membership_query_errors() {
        let u = IndependenceSystem::uniform(2, 1);
        assert!(matches!(
            u.is_independent(&set(&[7])).unwrap_err(),
            Error::IndexOutOfRange { index: 7, ground: 2 }
        ));
    }

    #[test]
    fn intersection_with_weaker_uniform_is_the_stronger_one() {
        let a = IndependenceSystem::uniform(3, 1);
        let b = IndependenceSystem::uniform(3, 2);
        let both = IndependenceSystem::intersection(vec![a.clone(), b]).unwrap();
        for mask in 0..8usize {
            let s = mask_to_set(mask);
            assert_eq!(
                both.is_independent(&s).unwrap(),
                a.is_independent(&s).unwrap()
            );
        }
    }

    #[test]
    fn partition_intersection_accepts_exactly_the_matchings() {
        let m = k22_matching();
        // Reference matching rule on K_{2,2}: no two edges share a side.
        let is_matching = |s: &ItemSet| -> bool {
            let mut lefts = ItemSet::new();
            let mut rights = ItemSet::new();
            for &e in s {
                if !lefts.insert(e / 2) || !rights.insert(e % 2) {
                    return false;
                }
            }
            true
        };
        for mask in 0..16usize {
            let s = mask_to_set(mask);
            assert_eq!(m.is_independent(&s).unwrap(), is_matching(&s), "{s:?}");
        }
    }

    #[test]
    fn singleton_intersection_is_the_identity() {
        let a = IndependenceSystem::uniform(3, 2);
        let only = IndependenceSystem::intersection(vec![a.clone()]).unwrap();
        for mask in 0..8usize {
            let s = mask_to_set(mask);
            assert_eq!(
                only.is_independent(&s).unwrap(),
                a.is_independent(&s).unwrap()
            );
        }
    }

    #[test]
    fn intersection_rejects_mismatched_grounds() {
        let a = IndependenceSystem::uniform(3, 1);
        let b = IndependenceSystem::uniform(4, 1);
        assert!(matches!(
            IndependenceSystem::intersection(vec![a, b]).unwrap_err(),
            Error::MismatchedGroundSizes { left: 3, right: 4 }
        ));
    }

    #[test]
    fn uniform_matroid_is_downward_closed() {
        let report = check_downward_closed(&IndependenceSystem::uniform(4, 2)).unwrap();
        assert!(report.closed);
        assert!(report.witness.is_none());
    }

    #[test]
    fn crafted_family_fails_downward_closure_with_witness() {
        let family = IndependenceSystem::custom("pair-only", 2, |s: &ItemSet| {
            s.is_empty() || *s == set(&[0, 1])
        });
        let report = check_downward_closed(&family).unwrap();
        assert!(!report.closed);
        assert_eq!(report.witness, Some((vec![0, 1], vec![0])));
    }

    #[test]
    fn matching_system_is_downward_closed() {
        assert!(check_downward_closed(&k22_matching()).unwrap().closed);
    }

    #[test]
    fn downward_closure_cap_is_enforced() {
        let big = IndependenceSystem::uniform(21, 3);
        assert!(matches!(
            check_downward_closed(&big).unwrap_err(),
            Error::GroundTooLarge { ground: 21, cap: 20 }
        ));
    }

    #[test]
    fn uniform_matroid_has_p_one() {
        let report = estimate_p(&IndependenceSystem::uniform(3, 2)).unwrap();
        assert_eq!(report.p_value, Ratio::from_integer(1));
    }

    #[test]
    fn partition_matroid_has_p_one() {
        let m = IndependenceSystem::partition(4, &[vec![0, 1], vec![2, 3]], &[1, 1]).unwrap();
        assert_eq!(estimate_p(&m).unwrap().p_value, Ratio::from_integer(1));
    }

    #[test]
    fn k22_matching_is_a_two_independence_system() {
        let report = estimate_p(&k22_matching()).unwrap();
        assert_eq!(report.p_value, Ratio::from_integer(2));
        // Inside {e11, e12, e21}: {e11} is maximal (e12 shares the left
        // endpoint, e21 the right one) while {e12, e21} is maximal of size 2.
        assert_eq!(report.witness_set, vec![0, 1, 2]);
        assert_eq!(report.witness_bases, (vec![1, 2], vec![0]));
    }

    #[test]
    fn p_estimation_cap_is_enforced() {
        let big = IndependenceSystem::uniform(13, 2);
        assert!(matches!(
            estimate_p(&big).unwrap_err(),
            Error::GroundTooLarge { ground: 13, cap: 12 }
        ));
    }

    #[test]
    fn p_estimation_rejects_non_downward_closed_systems() {
        let family = IndependenceSystem::custom("pair-only", 2, |s: &ItemSet| {
            s.is_empty() || *s == set(&[0, 1])
        });
        assert!(matches!(
            estimate_p(&family).unwrap_err(),
            Error::NotDownwardClosed { .. }
        ));
    }

    #[test]
    fn preport_bases_realize_the_ratio() {
        let report = estimate_p(&k22_matching()).unwrap();
        let (big, small) = &report.witness_bases;
        assert_eq!(
            report.p_value,
            Ratio::new(big.len() as u64, small.len() as u64)
        );
    }
}
