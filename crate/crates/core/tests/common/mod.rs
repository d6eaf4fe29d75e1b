//! Brute-force oracles shared by the integration tests. Everything here works
//! directly on the truth table and the definitions, without going through the
//! crate's lattice sweeps or memo tables.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xpaudit::model::all_points;
use xpaudit::{ExplanationProblem, FeatureSet, Point, Rational, TruthTable};

pub fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load(name: &str) -> TruthTable {
    TruthTable::parse(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

pub fn problem(name: &str, v: &str) -> ExplanationProblem {
    ExplanationProblem::new(load(name), v.parse().unwrap()).unwrap()
}

pub fn set(members: &[usize]) -> FeatureSet {
    members.iter().copied().collect()
}

fn agrees(x: &Point, v: &Point, s: FeatureSet) -> bool {
    s.iter().all(|i| x.get(i) == v.get(i))
}

/// Every point agreeing with `v` on `s` has the instance's prediction.
pub fn oracle_weak_axp(e: &ExplanationProblem, s: FeatureSet) -> bool {
    let t = e.table();
    all_points(e.m())
        .iter()
        .filter(|x| agrees(x, e.instance(), s))
        .all(|x| t.eval(x).unwrap() == e.prediction())
}

pub fn oracle_weak_cxp(e: &ExplanationProblem, y: FeatureSet) -> bool {
    let t = e.table();
    let fixed = y.complement(e.m());
    all_points(e.m())
        .iter()
        .filter(|x| agrees(x, e.instance(), fixed))
        .any(|x| t.eval(x).unwrap() != e.prediction())
}

/// Minimal sets for a predicate, checking every proper subset (not just the
/// one-element reductions).
fn oracle_minimal(m: usize, holds: impl Fn(FeatureSet) -> bool) -> Vec<FeatureSet> {
    let all: Vec<FeatureSet> = FeatureSet::all_subsets(m).collect();
    all.iter()
        .copied()
        .filter(|&s| {
            holds(s)
                && all
                    .iter()
                    .all(|&sub| sub == s || !sub.is_subset(s) || !holds(sub))
        })
        .collect()
}

pub fn oracle_axps(e: &ExplanationProblem) -> Vec<FeatureSet> {
    oracle_minimal(e.m(), |s| oracle_weak_axp(e, s))
}

pub fn oracle_cxps(e: &ExplanationProblem) -> Vec<FeatureSet> {
    oracle_minimal(e.m(), |s| oracle_weak_cxp(e, s))
}

pub fn oracle_phi(e: &ExplanationProblem, s: FeatureSet) -> Rational {
    let t = e.table();
    let pts: Vec<Point> = all_points(e.m())
        .into_iter()
        .filter(|x| agrees(x, e.instance(), s))
        .collect();
    let ones = pts.iter().filter(|x| t.eval(x).unwrap()).count();
    Rational::new(ones as i128, pts.len() as i128)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Shapley values as the mean marginal contribution over all `m!` feature
/// orderings.
pub fn oracle_shapley_by_orderings(e: &ExplanationProblem) -> Vec<Rational> {
    let m = e.m();
    let features: Vec<usize> = (1..=m).collect();
    let orders = permutations(&features);
    let n = orders.len() as i128;
    let mut totals = vec![Rational::from_integer(0); m];
    for order in &orders {
        let mut before = FeatureSet::empty();
        for &i in order {
            totals[i - 1] += oracle_phi(e, before.with(i)) - oracle_phi(e, before);
            before = before.with(i);
        }
    }
    totals.into_iter().map(|t| t / n).collect()
}

/// All non-constant tables on `m` features.
pub fn all_functions(m: usize) -> impl Iterator<Item = TruthTable> {
    let n = 1u64 << (1u64 << m);
    (1..n - 1).map(move |k| TruthTable::from_index(m, k).unwrap())
}

/// All explanation problems with at most `max_m` features.
pub fn all_problems(max_m: usize) -> impl Iterator<Item = ExplanationProblem> {
    (1..=max_m).flat_map(|m| {
        all_functions(m).flat_map(move |t| {
            (1..=1usize << m).map(move |row| ExplanationProblem::at_row(t.clone(), row).unwrap())
        })
    })
}

/// Seeded pseudo-random non-constant tables.
pub fn seeded_tables(m: usize, count: usize, seed: u64) -> Vec<TruthTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << m;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let values: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let t = TruthTable::new(m, values).unwrap();
        if !t.is_constant() {
            out.push(t);
        }
    }
    out
}

/// Seeded pseudo-random explanation problems on `m` features.
pub fn seeded_problems(m: usize, count: usize, seed: u64) -> Vec<ExplanationProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    seeded_tables(m, count, seed)
        .into_iter()
        .map(|t| {
            let row = rng.gen_range(1..=1usize << m);
            ExplanationProblem::at_row(t, row).unwrap()
        })
        .collect()
}
