//! Exact Shapley values for truth-table classifiers under the uniform input
//! distribution.
//!
//! For a coalition `S` the characteristic value `φ(S)` is the mean of the
//! classifier over the points agreeing with the instance on `S`. The value of
//! feature `i` is the weighted sum of the marginal gains `φ(S ∪ {i}) - φ(S)`
//! over all coalitions `S` not containing `i`, with weight
//! `|S|! (m - |S| - 1)! / m!`.
//!
//! Every Shapley value is a multiple of `1 / (m! 2^m)`, which gives an
//! integer-only evaluation path ([`shapley_scaled`]) used by the census. The
//! rational path ([`shapley_values`]) is the reference.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{cube_rows, ExplanationProblem, FeatureSet, Point};

pub type Rational = Ratio<i128>;

/// Renders a rational as `n` or `n/d`.
pub fn fraction_string(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn factorial(n: usize) -> i128 {
    (1..=n as i128).product()
}

/// The points agreeing with the instance on every feature of `s`, in row
/// order.
pub fn upsilon(e: &ExplanationProblem, s: FeatureSet) -> Result<Vec<Point>> {
    e.check_set(s)?;
    let m = e.m();
    Ok(cube_rows(m, e.instance().row_bits(), s)
        .map(|r| Point::from_row_bits(m, r))
        .collect())
}

/// Mean classifier value over [`upsilon`]`(e, s)`.
pub fn phi(e: &ExplanationProblem, s: FeatureSet) -> Result<Rational> {
    e.check_set(s)?;
    let m = e.m();
    let t = e.table();
    let ones = cube_rows(m, e.instance().row_bits(), s)
        .filter(|&r| t.at_bits(r))
        .count();
    Ok(Rational::new(ones as i128, 1i128 << (m - s.len())))
}

/// Marginal gain `φ(s ∪ {i}) - φ(s)`.
pub fn delta(e: &ExplanationProblem, i: usize, s: FeatureSet) -> Result<Rational> {
    e.check_feature(i)?;
    if s.contains(i) {
        return Err(Error::FeatureInCoalition(i));
    }
    Ok(phi(e, s.with(i))? - phi(e, s)?)
}

/// Shapley weight of a coalition of `size` features out of `m`.
pub fn varsigma(size: usize, m: usize) -> Result<Rational> {
    if m == 0 || size >= m {
        return Err(Error::CoalitionSize {
            size,
            max: m.saturating_sub(1),
        });
    }
    Ok(Rational::new(
        factorial(size) * factorial(m - size - 1),
        factorial(m),
    ))
}

/// `φ` for every coalition of one explanation problem.
///
/// Stores, for each coalition `S` (indexed by bitmask), the number of
/// positive points among those agreeing with the instance on `S`. Immutable
/// once built, so it can be shared between threads.
#[derive(Clone, Debug)]
pub struct PhiTable {
    m: usize,
    ones: Vec<u32>,
}

impl PhiTable {
    pub fn new(e: &ExplanationProblem) -> Self {
        let m = e.m();
        let n = 1usize << m;
        let v = e.instance().row_bits();
        let t = e.table();
        let mut ones = vec![0u32; n];
        // Each agreement set belongs to exactly one point.
        for r in 0..n {
            if t.at_bits(r) {
                let agree = FeatureSet::from_row_bits(!(r ^ v) & (n - 1), m);
                ones[agree.bits() as usize] = 1;
            }
        }
        // Sum over supersets.
        for i in 0..m {
            let bit = 1usize << i;
            for s in 0..n {
                if s & bit == 0 {
                    ones[s] += ones[s | bit];
                }
            }
        }
        PhiTable { m, ones }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of positive points agreeing with the instance on `s`.
    pub fn positives(&self, s: FeatureSet) -> u32 {
        self.ones[s.bits() as usize]
    }

    pub fn phi(&self, s: FeatureSet) -> Rational {
        Rational::new(self.positives(s) as i128, 1i128 << (self.m - s.len()))
    }

    /// `φ(s) · 2^m`, always an integer.
    pub fn phi_scaled(&self, s: FeatureSet) -> i128 {
        (self.positives(s) as i128) << s.len()
    }
}

/// Shapley values of one explanation problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapleyReport {
    /// `sv[i - 1]` is the value of feature `i`.
    pub sv: Vec<Rational>,
    pub phi_empty: Rational,
    pub prediction: bool,
}

impl ShapleyReport {
    pub fn value(&self, feature: usize) -> &Rational {
        &self.sv[feature - 1]
    }

    /// Features whose absolute value is strictly larger than every other's.
    pub fn strict_abs_max(&self) -> Option<usize> {
        let (best, val) = self
            .sv
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().cmp(&b.1.abs()))?;
        let unique = self
            .sv
            .iter()
            .enumerate()
            .all(|(k, x)| k == best || x.abs() < val.abs());
        unique.then_some(best + 1)
    }

    pub fn efficiency_holds(&self) -> bool {
        let total: Rational = self.sv.iter().sum();
        total == Rational::from_integer(self.prediction as i128) - self.phi_empty
    }
}

impl Serialize for ShapleyReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("ShapleyReport", 4)?;
        let sv: Vec<String> = self.sv.iter().map(fraction_string).collect();
        let approx: Vec<f64> = self.sv.iter().map(to_f64).collect();
        st.serialize_field("sv", &sv)?;
        st.serialize_field("sv_approx", &approx)?;
        st.serialize_field("phi_empty", &fraction_string(&self.phi_empty))?;
        st.serialize_field("prediction", &(self.prediction as u8))?;
        st.end()
    }
}

impl fmt::Display for ShapleyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.sv.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "Sv({})={}", k + 1, v)?;
        }
        Ok(())
    }
}

fn weights(m: usize) -> Vec<i128> {
    (0..m)
        .map(|k| factorial(k) * factorial(m - k - 1))
        .collect()
}

/// Exact Shapley values, summing over all coalitions for each feature.
///
/// Fails with [`Error::Invariant`] if the result breaks the efficiency
/// identity `Σ Sv(i) = κ(v) - φ(∅)`.
pub fn shapley_values(e: &ExplanationProblem) -> Result<ShapleyReport> {
    let phi = PhiTable::new(e);
    shapley_from_table(e, &phi)
}

pub fn shapley_from_table(e: &ExplanationProblem, phi: &PhiTable) -> Result<ShapleyReport> {
    let m = e.m();
    let weight: Vec<Rational> = (0..m).map(|k| varsigma(k, m)).collect::<Result<_>>()?;
    let full = FeatureSet::full(m);
    let sv = (1..=m)
        .map(|i| {
            let others = full.without(i);
            let mut acc = Rational::zero();
            let mut s = 0u32;
            loop {
                let coalition = FeatureSet::from_bits(s);
                let gain = phi.phi(coalition.with(i)) - phi.phi(coalition);
                acc += weight[coalition.len()] * gain;
                s = s.wrapping_sub(others.bits()) & others.bits();
                if s == 0 {
                    break;
                }
            }
            acc
        })
        .collect();
    let report = ShapleyReport {
        sv,
        phi_empty: phi.phi(FeatureSet::empty()),
        prediction: e.prediction(),
    };
    if !report.efficiency_holds() {
        return Err(Error::Invariant(format!(
            "Shapley values {report} violate efficiency (φ(∅) = {})",
            report.phi_empty
        )));
    }
    Ok(report)
}

/// Shapley values as integer numerators over the common denominator
/// `m! · 2^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledShapley {
    pub denominator: i128,
    pub numerators: Vec<i128>,
}

impl ScaledShapley {
    pub fn to_rationals(&self) -> Vec<Rational> {
        self.numerators
            .iter()
            .map(|&n| Rational::new(n, self.denominator))
            .collect()
    }
}

/// Integer-only evaluation of the Shapley values.
pub fn shapley_scaled(e: &ExplanationProblem) -> ScaledShapley {
    scaled_from_table(&PhiTable::new(e))
}

pub fn scaled_from_table(phi: &PhiTable) -> ScaledShapley {
    let m = phi.m();
    let w = weights(m);
    let mut numerators = vec![0i128; m];
    for s in 0..1u32 << m {
        let coalition = FeatureSet::from_bits(s);
        let base = phi.phi_scaled(coalition);
        let k = coalition.len();
        if k == m {
            continue;
        }
        for (i, slot) in numerators.iter_mut().enumerate() {
            if s >> i & 1 == 0 {
                *slot += w[k] * (phi.phi_scaled(coalition.with(i + 1)) - base);
            }
        }
    }
    ScaledShapley {
        denominator: factorial(m) << m,
        numerators,
    }
}

/// True when `a` and `b` are non-zero with the same sign.
pub fn same_sign<T: Signed>(a: &T, b: &T) -> bool {
    (a.is_positive() && b.is_positive()) || (a.is_negative() && b.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TruthTable;

    fn problem(tt: &str, v: &str) -> ExplanationProblem {
        ExplanationProblem::new(TruthTable::parse(tt).unwrap(), v.parse().unwrap()).unwrap()
    }

    fn fig1() -> ExplanationProblem {
        problem("tt 4\n0110100000000000", "0,0,0,0")
    }

    fn set(members: &[usize]) -> FeatureSet {
        members.iter().copied().collect()
    }

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn upsilon_examples() {
        let e = fig1();
        let pts = upsilon(&e, set(&[1, 4])).unwrap();
        let rows: Vec<usize> = pts.iter().map(Point::row_index).collect();
        assert_eq!(rows, vec![1, 3, 5, 7]);
        assert_eq!(pts[1].to_string(), "(0,0,1,0)");
        assert_eq!(
            upsilon(&e, FeatureSet::full(4)).unwrap(),
            vec![e.instance().clone()]
        );
        assert_eq!(upsilon(&e, FeatureSet::empty()).unwrap().len(), 16);
    }

    #[test]
    fn phi_examples() {
        let e = fig1();
        assert_eq!(phi(&e, set(&[1, 4])).unwrap(), r(2, 4));
        assert_eq!(phi(&e, set(&[3, 4])).unwrap(), r(1, 4));
        assert_eq!(phi(&e, FeatureSet::full(4)).unwrap(), r(0, 1));
        let table = PhiTable::new(&e);
        for s in FeatureSet::all_subsets(4) {
            assert_eq!(table.phi(s), phi(&e, s).unwrap(), "{s}");
        }
    }

    #[test]
    fn delta_examples() {
        let and2 = problem("tt 2\n0001", "1,1");
        assert_eq!(delta(&and2, 1, FeatureSet::empty()).unwrap(), r(1, 4));
        let id2 = problem("tt 2\n0011", "1,0");
        assert_eq!(delta(&id2, 2, set(&[1])).unwrap(), r(0, 1));
        assert_eq!(delta(&id2, 2, FeatureSet::empty()).unwrap(), r(0, 1));
        assert!(matches!(
            delta(&id2, 1, set(&[1])),
            Err(Error::FeatureInCoalition(1))
        ));
    }

    #[test]
    fn varsigma_examples() {
        assert_eq!(varsigma(0, 4).unwrap(), r(1, 4));
        assert_eq!(varsigma(1, 4).unwrap(), r(1, 12));
        assert_eq!(varsigma(3, 4).unwrap(), r(1, 4));
        assert!(varsigma(4, 4).is_err());
        assert!(varsigma(0, 0).is_err());
    }

    #[test]
    fn shapley_examples() {
        let and2 = shapley_values(&problem("tt 2\n0001", "1,1")).unwrap();
        assert_eq!(and2.sv, vec![r(3, 8), r(3, 8)]);
        assert_eq!(and2.phi_empty, r(1, 4));
        let id2 = shapley_values(&problem("tt 2\n0011", "1,0")).unwrap();
        assert_eq!(id2.sv, vec![r(1, 2), r(0, 1)]);
        let id1 = shapley_values(&problem("tt 1\n01", "0")).unwrap();
        assert_eq!(id1.sv, vec![r(-1, 2)]);
        assert_eq!(id1.to_string(), "Sv(1)=-1/2");
    }

    #[test]
    fn running_example_irrelevant_feature_dominates() {
        let report = shapley_values(&fig1()).unwrap();
        for i in 2..=4 {
            assert!(report.value(1).abs() > report.value(i).abs());
            assert!(report.value(i).is_negative());
        }
        assert!(report.value(1).is_positive());
        assert_eq!(report.strict_abs_max(), Some(1));
    }

    #[test]
    fn scaled_path_matches_rational_path() {
        for e in [
            fig1(),
            problem("tt 2\n0001", "1,1"),
            problem("tt 3\n01101001", "1,0,1"),
        ] {
            let scaled = shapley_scaled(&e);
            assert_eq!(scaled.to_rationals(), shapley_values(&e).unwrap().sv);
        }
    }

    #[test]
    fn strict_abs_max_needs_a_unique_winner() {
        let and2 = shapley_values(&problem("tt 2\n0001", "1,1")).unwrap();
        assert_eq!(and2.strict_abs_max(), None);
    }

    #[test]
    fn serializes_fractions_and_decimals() {
        let report = shapley_values(&problem("tt 1\n01", "0")).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"sv":["-1/2"],"sv_approx":[-0.5],"phi_empty":"1/2","prediction":0}"#
        );
    }
}
