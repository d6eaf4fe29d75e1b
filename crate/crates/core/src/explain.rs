//! Abductive and contrastive explanations, feature relevancy and
//! minimal-hitting-set duality.
//!
//! A set `X` is a weak AXp when every point that agrees with the instance on
//! `X` receives the instance's prediction. A set `Y` is a weak CXp when some
//! point that agrees with the instance outside `Y` receives the other class.
//! Both predicates are monotone, so the subset-minimal sets (the AXps and
//! CXps proper) are the weak sets none of whose one-element reductions is
//! weak.
//!
//! Single-set queries walk the relevant subcube of the truth table directly.
//! Enumeration instead computes the weak-AXp verdict for all `2^m` subsets at
//! once: `X` fails to be a weak AXp exactly when `X` is contained in the
//! agreement set of some counterexample point, so the failing sets are the
//! down-closure of those agreement sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{cube_rows, ExplanationProblem, FeatureSet};

/// All AXps and all CXps of one explanation problem, each sorted by bitmask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExplanationSets {
    pub axps: Vec<FeatureSet>,
    pub cxps: Vec<FeatureSet>,
}

/// Partition of the features into relevant (occurring in some AXp) and
/// irrelevant ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RelevancyReport {
    pub relevant: FeatureSet,
    pub irrelevant: FeatureSet,
}

fn all_rows_predict(e: &ExplanationProblem, fixed: FeatureSet) -> bool {
    let t = e.table();
    let c = e.prediction();
    cube_rows(e.m(), e.instance().row_bits(), fixed).all(|r| t.at_bits(r) == c)
}

/// Fixing the features of `x` to the instance's values guarantees the
/// prediction.
pub fn is_weak_axp(e: &ExplanationProblem, x: FeatureSet) -> Result<bool> {
    e.check_set(x)?;
    Ok(all_rows_predict(e, x))
}

pub fn is_axp(e: &ExplanationProblem, x: FeatureSet) -> Result<bool> {
    e.check_set(x)?;
    Ok(all_rows_predict(e, x) && x.iter().all(|t| !all_rows_predict(e, x.without(t))))
}

/// Freeing the features of `y` (all others fixed to the instance) allows a
/// different prediction.
pub fn is_weak_cxp(e: &ExplanationProblem, y: FeatureSet) -> Result<bool> {
    e.check_set(y)?;
    Ok(!all_rows_predict(e, y.complement(e.m())))
}

pub fn is_cxp(e: &ExplanationProblem, y: FeatureSet) -> Result<bool> {
    e.check_set(y)?;
    let m = e.m();
    Ok(!all_rows_predict(e, y.complement(m))
        && y.iter()
            .all(|t| all_rows_predict(e, y.without(t).complement(m))))
}

/// Weak-AXp verdict for every subset of the features, indexed by bitmask.
pub(crate) fn weak_axp_lattice(e: &ExplanationProblem) -> Vec<bool> {
    let m = e.m();
    let n = 1usize << m;
    let t = e.table();
    let c = e.prediction();
    let v = e.instance().row_bits();
    let mut blocked = vec![false; n];
    for r in 0..n {
        if t.at_bits(r) != c {
            let agree = FeatureSet::from_row_bits(!(r ^ v) & (n - 1), m);
            blocked[agree.bits() as usize] = true;
        }
    }
    // Propagate each counterexample to every subset of its agreement set.
    for i in 0..m {
        let bit = 1usize << i;
        for s in 0..n {
            if s & bit == 0 && blocked[s | bit] {
                blocked[s] = true;
            }
        }
    }
    blocked.into_iter().map(|b| !b).collect()
}

fn minimal_members(m: usize, holds: impl Fn(usize) -> bool) -> Vec<FeatureSet> {
    (0..1usize << m)
        .filter(|&s| holds(s) && (0..m).all(|i| s >> i & 1 == 0 || !holds(s & !(1 << i))))
        .map(|s| FeatureSet::from_bits(s as u32))
        .collect()
}

pub(crate) fn sets_from_lattice(m: usize, weak_axp: &[bool]) -> ExplanationSets {
    let full = (1usize << m) - 1;
    ExplanationSets {
        axps: minimal_members(m, |s| weak_axp[s]),
        cxps: minimal_members(m, |s| !weak_axp[full & !s]),
    }
}

/// Computes both explanation sets from a single lattice sweep.
pub fn explanation_sets(e: &ExplanationProblem) -> ExplanationSets {
    sets_from_lattice(e.m(), &weak_axp_lattice(e))
}

pub fn enumerate_axps(e: &ExplanationProblem) -> Vec<FeatureSet> {
    let lattice = weak_axp_lattice(e);
    minimal_members(e.m(), |s| lattice[s])
}

pub fn enumerate_cxps(e: &ExplanationProblem) -> Vec<FeatureSet> {
    let lattice = weak_axp_lattice(e);
    let full = (1usize << e.m()) - 1;
    minimal_members(e.m(), |s| !lattice[full & !s])
}

/// All subset-minimal subsets of `universe` that intersect every member of
/// `sets`, in bitmask order.
///
/// The sweep visits every subset of `universe` and so is exponential in its
/// size; it is meant for the small feature counts handled here. Members of
/// `sets` that reach outside `universe` can only be hit inside it.
pub fn minimal_hitting_sets(sets: &[FeatureSet], universe: FeatureSet) -> Result<Vec<FeatureSet>> {
    if sets.iter().any(|s| !s.intersects(universe)) {
        return Err(Error::EmptySetToHit);
    }
    let hits = |h: u32| sets.iter().all(|s| s.bits() & h != 0);
    let u = universe.bits();
    let mut out = Vec::new();
    let mut sub = 0u32;
    loop {
        if hits(sub)
            && FeatureSet::from_bits(sub)
                .iter()
                .all(|t| !hits(sub & !(1 << (t - 1))))
        {
            out.push(FeatureSet::from_bits(sub));
        }
        sub = sub.wrapping_sub(u) & u;
        if sub == 0 {
            break;
        }
    }
    Ok(out)
}

/// Each family is exactly the set of minimal hitting sets of the other.
pub fn check_mhs_duality(s: &ExplanationSets) -> bool {
    let universe = s
        .axps
        .iter()
        .chain(&s.cxps)
        .fold(FeatureSet::empty(), |acc, &x| acc | x);
    let dual_of = |family: &[FeatureSet]| {
        let mut mhs = minimal_hitting_sets(family, universe).ok()?;
        mhs.sort();
        Some(mhs)
    };
    let mut axps = s.axps.clone();
    let mut cxps = s.cxps.clone();
    axps.sort();
    cxps.sort();
    dual_of(&s.cxps).as_ref() == Some(&axps) && dual_of(&s.axps).as_ref() == Some(&cxps)
}

fn union(sets: &[FeatureSet]) -> FeatureSet {
    sets.iter().fold(FeatureSet::empty(), |acc, &s| acc | s)
}

/// Relevancy computed from already enumerated explanation sets.
pub fn relevancy_from_sets(m: usize, sets: &ExplanationSets) -> Result<RelevancyReport> {
    if sets.axps.is_empty() || sets.axps.iter().any(|x| x.is_empty()) {
        return Err(Error::Invariant(format!(
            "degenerate AXp family {:?} for a non-constant classifier",
            sets.axps
        )));
    }
    let relevant = union(&sets.axps);
    let via_cxps = union(&sets.cxps);
    if relevant != via_cxps {
        return Err(Error::Invariant(format!(
            "features in AXps {relevant} differ from features in CXps {via_cxps}"
        )));
    }
    Ok(RelevancyReport {
        relevant,
        irrelevant: relevant.complement(m),
    })
}

pub fn relevancy(e: &ExplanationProblem) -> Result<RelevancyReport> {
    relevancy_from_sets(e.m(), &explanation_sets(e))
}

/// Checks that feature `p` may take either value on top of any AXp with `p`
/// itself released, without changing the prediction.
///
/// With `p` outside an AXp `X` this reduces to `X` being sufficient. With `p`
/// inside `X` it asks whether `X \ {p}` is still sufficient, which minimality
/// rules out. The check therefore holds exactly for irrelevant features.
pub fn check_irrelevance_formula(e: &ExplanationProblem, p: usize) -> Result<bool> {
    e.check_feature(p)?;
    Ok(enumerate_axps(e)
        .into_iter()
        .all(|x| all_rows_predict(e, x.without(p))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, TruthTable};

    fn set(members: &[usize]) -> FeatureSet {
        members.iter().copied().collect()
    }

    fn problem(tt: &str, v: &str) -> ExplanationProblem {
        ExplanationProblem::new(TruthTable::parse(tt).unwrap(), v.parse::<Point>().unwrap())
            .unwrap()
    }

    fn fig1() -> ExplanationProblem {
        problem("tt 4\n0110100000000000", "0,0,0,0")
    }

    #[test]
    fn weak_axp_verdicts_on_running_example() {
        let e = fig1();
        assert!(!is_weak_axp(&e, set(&[2, 3])).unwrap());
        assert!(!is_weak_axp(&e, set(&[1, 2, 4])).unwrap());
        assert!(is_weak_axp(&e, set(&[2, 3, 4])).unwrap());
        assert!(is_weak_axp(&e, FeatureSet::full(4)).unwrap());
    }

    #[test]
    fn axp_verdicts_on_running_example() {
        let e = fig1();
        assert!(is_axp(&e, set(&[2, 3, 4])).unwrap());
        assert!(!is_axp(&e, set(&[1, 2, 3, 4])).unwrap());
        assert!(!is_axp(&e, set(&[2, 3])).unwrap());
    }

    #[test]
    fn cxp_verdicts() {
        let e = fig1();
        assert!(is_weak_cxp(&e, set(&[4])).unwrap());
        assert!(!is_weak_cxp(&e, FeatureSet::empty()).unwrap());
        assert!(!is_weak_cxp(&e, set(&[1])).unwrap());
        assert!(is_cxp(&e, set(&[2])).unwrap());
        assert!(!is_cxp(&e, set(&[2, 3])).unwrap());
        let and2 = problem("tt 2\n0001", "1,1");
        assert!(is_cxp(&and2, set(&[1])).unwrap());
    }

    #[test]
    fn out_of_range_sets_are_rejected() {
        let e = problem("tt 2\n0001", "1,1");
        assert!(matches!(
            is_weak_axp(&e, set(&[3])),
            Err(Error::FeatureOutOfRange { feature: 3, m: 2 })
        ));
        assert!(check_irrelevance_formula(&e, 0).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let e = fig1();
        assert_eq!(enumerate_axps(&e), vec![set(&[2, 3, 4])]);
        assert_eq!(enumerate_cxps(&e), vec![set(&[2]), set(&[3]), set(&[4])]);

        let and2 = problem("tt 2\n0001", "1,1");
        assert_eq!(enumerate_axps(&and2), vec![set(&[1, 2])]);
        assert_eq!(enumerate_cxps(&and2), vec![set(&[1]), set(&[2])]);

        let id1 = problem("tt 1\n01", "0");
        assert_eq!(enumerate_axps(&id1), vec![set(&[1])]);
        assert_eq!(enumerate_cxps(&id1), vec![set(&[1])]);
    }

    #[test]
    fn hitting_set_examples() {
        let u = FeatureSet::full(4);
        assert_eq!(
            minimal_hitting_sets(&[set(&[2]), set(&[3]), set(&[4])], u).unwrap(),
            vec![set(&[2, 3, 4])]
        );
        assert_eq!(
            minimal_hitting_sets(&[set(&[1, 2])], u).unwrap(),
            vec![set(&[1]), set(&[2])]
        );
        assert_eq!(
            minimal_hitting_sets(&[set(&[1]), set(&[1, 2])], u).unwrap(),
            vec![set(&[1])]
        );
        assert!(matches!(
            minimal_hitting_sets(&[set(&[1]), FeatureSet::empty()], u),
            Err(Error::EmptySetToHit)
        ));
        assert_eq!(
            minimal_hitting_sets(&[], u).unwrap(),
            vec![FeatureSet::empty()]
        );
    }

    #[test]
    fn duality_examples() {
        assert!(check_mhs_duality(&explanation_sets(&fig1())));
        assert!(!check_mhs_duality(&ExplanationSets {
            axps: vec![set(&[1])],
            cxps: vec![set(&[2])],
        }));
        assert!(check_mhs_duality(&explanation_sets(&problem(
            "tt 2\n0001",
            "1,1"
        ))));
    }

    #[test]
    fn relevancy_examples() {
        let r = relevancy(&fig1()).unwrap();
        assert_eq!(r.relevant, set(&[2, 3, 4]));
        assert_eq!(r.irrelevant, set(&[1]));

        let r = relevancy(&problem("tt 2\n0011", "1,0")).unwrap();
        assert_eq!((r.relevant, r.irrelevant), (set(&[1]), set(&[2])));

        let r = relevancy(&problem("tt 2\n0001", "1,1")).unwrap();
        assert_eq!(
            (r.relevant, r.irrelevant),
            (set(&[1, 2]), FeatureSet::empty())
        );
    }

    #[test]
    fn irrelevance_formula_examples() {
        let e = fig1();
        assert!(check_irrelevance_formula(&e, 1).unwrap());
        assert!(!check_irrelevance_formula(&e, 4).unwrap());
        assert!(!check_irrelevance_formula(&problem("tt 2\n0001", "1,1"), 2).unwrap());
    }

    #[test]
    fn relevancy_rejects_inconsistent_sets() {
        let bad = ExplanationSets {
            axps: vec![set(&[1])],
            cxps: vec![set(&[2])],
        };
        assert!(matches!(
            relevancy_from_sets(2, &bad),
            Err(Error::Invariant(_))
        ));
        let empty = ExplanationSets {
            axps: vec![FeatureSet::empty()],
            cxps: vec![],
        };
        assert!(matches!(
            relevancy_from_sets(2, &empty),
            Err(Error::Invariant(_))
        ));
    }
}
