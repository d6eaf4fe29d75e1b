//! Truth-table classifiers, points, feature sets and explanation problems.
//!
//! Features are numbered `1..=m`. Rows are numbered `1..=2^m` with feature 1
//! as the most significant bit, so the point `(0,0,0,1)` is row 2 and
//! `(1,0,0,0)` is row 9 of a four-feature table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported feature count. Tables hold `2^m` entries.
pub const MAX_FEATURES: usize = 20;

fn check_feature_count(m: usize) -> Result<()> {
    if m == 0 || m > MAX_FEATURES {
        return Err(Error::FeatureCount(m));
    }
    Ok(())
}

/// A subset of the features `{1..=m}`, stored as a bitmask where feature `i`
/// occupies bit `i - 1`.
///
/// Ordering is by raw bitmask, which is the deterministic order used for all
/// enumerated explanation sets.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSet(u32);

impl FeatureSet {
    pub const fn empty() -> Self {
        FeatureSet(0)
    }

    /// All features `1..=m`.
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_FEATURES);
        FeatureSet(((1u64 << m) - 1) as u32)
    }

    pub const fn from_bits(bits: u32) -> Self {
        FeatureSet(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn singleton(feature: usize) -> Self {
        debug_assert!((1..=MAX_FEATURES).contains(&feature));
        FeatureSet(1 << (feature - 1))
    }

    pub fn contains(self, feature: usize) -> bool {
        (1..=32).contains(&feature) && self.0 & (1 << (feature - 1)) != 0
    }

    pub fn with(self, feature: usize) -> Self {
        self | FeatureSet::singleton(feature)
    }

    pub fn without(self, feature: usize) -> Self {
        FeatureSet(self.0 & !(1 << (feature - 1)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: FeatureSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: FeatureSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Complement relative to `{1..=m}`.
    pub fn complement(self, m: usize) -> Self {
        FeatureSet(!self.0 & FeatureSet::full(m).0)
    }

    /// True if every member lies in `{1..=m}`.
    pub fn within(self, m: usize) -> bool {
        self.is_subset(FeatureSet::full(m))
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(bit + 1)
        })
    }

    /// All subsets of `{1..=m}` in bitmask order.
    pub fn all_subsets(m: usize) -> impl Iterator<Item = FeatureSet> {
        (0..1u32 << m).map(FeatureSet)
    }

    /// Maps a 0-based row bit pattern (feature 1 most significant) to the
    /// feature set of positions holding a one.
    pub(crate) fn from_row_bits(bits: usize, m: usize) -> Self {
        let mut out = 0u32;
        for i in 1..=m {
            if bits >> (m - i) & 1 == 1 {
                out |= 1 << (i - 1);
            }
        }
        FeatureSet(out)
    }

    /// Inverse of [`FeatureSet::from_row_bits`].
    pub(crate) fn to_row_bits(self, m: usize) -> usize {
        self.iter().fold(0usize, |acc, i| acc | 1 << (m - i))
    }
}

impl std::ops::BitOr for FeatureSet {
    type Output = FeatureSet;
    fn bitor(self, rhs: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 | rhs.0)
    }
}

impl std::ops::BitAnd for FeatureSet {
    type Output = FeatureSet;
    fn bitand(self, rhs: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 & rhs.0)
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(FeatureSet::empty(), |s, i| s.with(i))
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(deserializer)?;
        if let Some(bad) = members.iter().find(|&&i| i == 0 || i > MAX_FEATURES) {
            return Err(serde::de::Error::custom(format!(
                "feature {bad} out of range"
            )));
        }
        Ok(members.into_iter().collect())
    }
}

/// A point of `{0,1}^m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point(Vec<bool>);

impl Point {
    pub fn new(coordinates: Vec<bool>) -> Self {
        Point(coordinates)
    }

    /// The point stored at 1-based `row` of an `m`-feature table.
    pub fn from_row(m: usize, row: usize) -> Result<Self> {
        check_feature_count(m)?;
        let max = 1usize << m;
        if row == 0 || row > max {
            return Err(Error::RowOutOfRange { row, max });
        }
        Ok(Point::from_row_bits(m, row - 1))
    }

    pub(crate) fn from_row_bits(m: usize, bits: usize) -> Self {
        Point((1..=m).map(|i| bits >> (m - i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coordinates(&self) -> &[bool] {
        &self.0
    }

    /// Value of 1-based feature `i`.
    pub fn get(&self, feature: usize) -> bool {
        self.0[feature - 1]
    }

    /// 1-based row number: `1 + sum_i p_i * 2^(m - i)`.
    pub fn row_index(&self) -> usize {
        self.row_bits() + 1
    }

    pub(crate) fn row_bits(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| acc << 1 | b as usize)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, &b) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `0,1,1`, `(0,1,1)` or `011`.
impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim();
        let body = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .unwrap_or(body);
        let mut coords = Vec::new();
        for (k, c) in body.chars().enumerate() {
            match c {
                '0' => coords.push(false),
                '1' => coords.push(true),
                ',' | ' ' => {}
                other => {
                    return Err(Error::parse(
                        1,
                        k + 1,
                        format!("invalid coordinate {other:?}"),
                    ))
                }
            }
        }
        if coords.is_empty() {
            return Err(Error::parse(1, 1, "empty point"));
        }
        Ok(Point(coords))
    }
}

/// 0-based rows of the points agreeing with `v_bits` on every feature of
/// `fixed`, in ascending order.
pub(crate) fn cube_rows(m: usize, v_bits: usize, fixed: FeatureSet) -> impl Iterator<Item = usize> {
    let fixed_mask = fixed.to_row_bits(m);
    let free = !fixed_mask & ((1usize << m) - 1);
    let base = v_bits & fixed_mask;
    let mut next = Some(0usize);
    std::iter::from_fn(move || {
        let sub = next?;
        let following = sub.wrapping_sub(free) & free;
        next = (following != 0).then_some(following);
        Some(base | sub)
    })
}

/// The `2^m` points of `{0,1}^m` in ascending row order.
pub fn all_points(m: usize) -> Vec<Point> {
    (0..1usize << m)
        .map(|r| Point::from_row_bits(m, r))
        .collect()
}

/// A complete boolean function on `m` features.
///
/// Constant tables can be built and parsed, but every explanation or
/// attribution operation rejects them.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct TruthTable {
    m: usize,
    values: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    m: usize,
    values: String,
}

impl TryFrom<TableRepr> for TruthTable {
    type Error = Error;

    fn try_from(repr: TableRepr) -> Result<Self> {
        let values = parse_bits(&repr.values, 1)?;
        TruthTable::new(repr.m, values)
    }
}

impl From<TruthTable> for TableRepr {
    fn from(t: TruthTable) -> Self {
        TableRepr {
            m: t.m,
            values: t.bitstring(),
        }
    }
}

fn parse_bits(text: &str, line: usize) -> Result<Vec<bool>> {
    text.chars()
        .enumerate()
        .map(|(k, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::parse(
                line,
                k + 1,
                format!("expected '0' or '1', found {other:?}"),
            )),
        })
        .collect()
}

impl TruthTable {
    pub fn new(m: usize, values: Vec<bool>) -> Result<Self> {
        check_feature_count(m)?;
        let expected = 1usize << m;
        if values.len() != expected {
            return Err(Error::TableLength {
                m,
                expected,
                got: values.len(),
            });
        }
        Ok(TruthTable { m, values })
    }

    /// Builds a table from the low `2^m` bits of `bits`, row 1 being the
    /// most significant of them. Ascending `bits` thus walks the tables in
    /// ascending bitstring order.
    pub fn from_index(m: usize, bits: u64) -> Result<Self> {
        check_feature_count(m)?;
        if m > 6 {
            return Err(Error::FeatureCount(m));
        }
        let n = 1usize << m;
        let values = (0..n).map(|r| bits >> (n - 1 - r) & 1 == 1).collect();
        Ok(TruthTable { m, values })
    }

    /// Inverse of [`TruthTable::from_index`] for `m <= 6`.
    pub fn index(&self) -> Option<u64> {
        (self.m <= 6).then(|| self.values.iter().fold(0u64, |acc, &b| acc << 1 | b as u64))
    }

    /// Builds a table by evaluating `f` on every point in row order.
    pub fn from_fn(m: usize, mut f: impl FnMut(&Point) -> bool) -> Result<Self> {
        check_feature_count(m)?;
        let values = all_points(m).iter().map(&mut f).collect();
        Ok(TruthTable { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&b| b == first)
    }

    /// Value stored at 1-based `row`.
    pub fn row(&self, row: usize) -> Result<bool> {
        let max = self.values.len();
        if row == 0 || row > max {
            return Err(Error::RowOutOfRange { row, max });
        }
        Ok(self.values[row - 1])
    }

    pub(crate) fn at_bits(&self, bits: usize) -> bool {
        self.values[bits]
    }

    pub fn eval(&self, p: &Point) -> Result<bool> {
        if p.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.len(),
            });
        }
        Ok(self.values[p.row_bits()])
    }

    /// The complement function.
    pub fn negated(&self) -> TruthTable {
        TruthTable {
            m: self.m,
            values: self.values.iter().map(|b| !b).collect(),
        }
    }

    /// Relabels features: feature `i` of `self` becomes feature `perm[i - 1]`
    /// of the result. `perm` must be a permutation of `1..=m`.
    pub fn permuted(&self, perm: &[usize]) -> Result<TruthTable> {
        check_permutation(perm, self.m)?;
        let m = self.m;
        let mut values = vec![false; self.values.len()];
        for (bits, &v) in self.values.iter().enumerate() {
            let src = Point::from_row_bits(m, bits);
            values[permute_point(&src, perm).row_bits()] = v;
        }
        Ok(TruthTable { m, values })
    }

    /// The value column as a string of `0`/`1`, row 1 first.
    pub fn bitstring(&self) -> String {
        self.values
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Serializes to the `.tt` text format (with a trailing newline).
    pub fn to_tt_string(&self) -> String {
        format!("tt {}\n{}\n", self.m, self.bitstring())
    }

    /// Parses the `.tt` text format: a header line `tt <m>` followed by a
    /// line of exactly `2^m` characters from `{0,1}`, optionally followed by
    /// a single newline.
    pub fn parse(text: &str) -> Result<TruthTable> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n');
        let header = lines.next().unwrap_or("");
        let Some(arity) = header.strip_prefix("tt ") else {
            return Err(Error::parse(1, 1, "expected header `tt <m>`"));
        };
        if arity.is_empty() || !arity.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse(
                1,
                4,
                format!("invalid feature count {arity:?}"),
            ));
        }
        let m: usize = arity
            .parse()
            .map_err(|_| Error::parse(1, 4, format!("invalid feature count {arity:?}")))?;
        if m == 0 || m > MAX_FEATURES {
            return Err(Error::parse(
                1,
                4,
                format!("feature count {m} outside 1..={MAX_FEATURES}"),
            ));
        }
        let Some(bits) = lines.next() else {
            return Err(Error::parse(2, 1, "missing value line"));
        };
        if lines.next().is_some() {
            return Err(Error::parse(3, 1, "unexpected content after value line"));
        }
        let values = parse_bits(bits, 2)?;
        let expected = 1usize << m;
        if values.len() != expected {
            return Err(Error::parse(
                2,
                values.len().min(expected) + 1,
                format!(
                    "expected {expected} values for m = {m}, found {}",
                    values.len()
                ),
            ));
        }
        Ok(TruthTable { m, values })
    }
}

impl FromStr for TruthTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TruthTable::parse(s)
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tt {} {}", self.m, self.bitstring())
    }
}

/// Parses the `.tt` text format. See [`TruthTable::parse`].
pub fn parse_truth_table(text: &str) -> Result<TruthTable> {
    TruthTable::parse(text)
}

pub(crate) fn check_permutation(perm: &[usize], m: usize) -> Result<()> {
    if perm.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: perm.len(),
        });
    }
    let mut seen = FeatureSet::empty();
    for &p in perm {
        if p == 0 || p > m || seen.contains(p) {
            return Err(Error::FeatureOutOfRange { feature: p, m });
        }
        seen = seen.with(p);
    }
    Ok(())
}

/// Moves coordinate `i` of `p` to position `perm[i - 1]`.
pub fn permute_point(p: &Point, perm: &[usize]) -> Point {
    let mut out = vec![false; p.len()];
    for (i, &b) in p.coordinates().iter().enumerate() {
        out[perm[i] - 1] = b;
    }
    Point::new(out)
}

/// Image of a feature set under `perm`.
pub fn permute_set(s: FeatureSet, perm: &[usize]) -> FeatureSet {
    s.iter().map(|i| perm[i - 1]).collect()
}

/// An explanation problem: a non-constant classifier, an instance `v` and
/// its prediction `c = κ(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplanationProblem {
    table: TruthTable,
    instance: Point,
    prediction: bool,
}

impl ExplanationProblem {
    pub fn new(table: TruthTable, instance: Point) -> Result<Self> {
        if table.is_constant() {
            return Err(Error::ConstantFunction);
        }
        let prediction = table.eval(&instance)?;
        Ok(ExplanationProblem {
            table,
            instance,
            prediction,
        })
    }

    /// Problem for the point at 1-based `row`.
    pub fn at_row(table: TruthTable, row: usize) -> Result<Self> {
        let instance = Point::from_row(table.m(), row)?;
        ExplanationProblem::new(table, instance)
    }

    pub fn table(&self) -> &TruthTable {
        &self.table
    }

    pub fn instance(&self) -> &Point {
        &self.instance
    }

    pub fn prediction(&self) -> bool {
        self.prediction
    }

    pub fn m(&self) -> usize {
        self.table.m()
    }

    pub(crate) fn check_set(&self, s: FeatureSet) -> Result<()> {
        if !s.within(self.m()) {
            let feature = s.iter().find(|&i| i > self.m()).unwrap_or(0);
            return Err(Error::FeatureOutOfRange {
                feature,
                m: self.m(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_feature(&self, feature: usize) -> Result<()> {
        if feature == 0 || feature > self.m() {
            return Err(Error::FeatureOutOfRange {
                feature,
                m: self.m(),
            });
        }
        Ok(())
    }

    /// The same instance against the complement function.
    pub fn negated(&self) -> ExplanationProblem {
        ExplanationProblem {
            table: self.table.negated(),
            instance: self.instance.clone(),
            prediction: !self.prediction,
        }
    }

    /// The problem with features relabeled by `perm` (see
    /// [`TruthTable::permuted`]).
    pub fn permuted(&self, perm: &[usize]) -> Result<ExplanationProblem> {
        let table = self.table.permuted(perm)?;
        let instance = permute_point(&self.instance, perm);
        ExplanationProblem::new(table, instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> TruthTable {
        TruthTable::parse("tt 4\n0110100000000000\n").unwrap()
    }

    #[test]
    fn row_index_matches_table_numbering() {
        let p: Point = "0,0,0,1".parse().unwrap();
        assert_eq!(p.row_index(), 2);
        let p: Point = "1,0,0,0".parse().unwrap();
        assert_eq!(p.row_index(), 9);
        let p: Point = "0,0,0,0".parse().unwrap();
        assert_eq!(p.row_index(), 1);
    }

    #[test]
    fn eval_reads_the_value_column() {
        let t = fig1();
        assert!(t.eval(&"0001".parse().unwrap()).unwrap());
        assert!(!t.eval(&"1001".parse().unwrap()).unwrap());
        assert_eq!(
            t.eval(&Point::from_row(4, 1).unwrap()).unwrap(),
            t.values()[0]
        );
        assert!(matches!(
            t.eval(&"001".parse().unwrap()),
            Err(Error::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn parse_examples() {
        let and2 = parse_truth_table("tt 2\n0001").unwrap();
        assert_eq!(and2.values(), &[false, false, false, true]);
        let id1 = parse_truth_table("tt 1\n01").unwrap();
        assert_eq!(id1.values(), &[false, true]);
        match parse_truth_table("tt 2\n000") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let cases = [
            ("tx 2\n0001\n", 1, 1),
            ("tt two\n0001\n", 1, 4),
            ("tt 0\n0\n", 1, 4),
            ("tt 21\n0\n", 1, 4),
            ("tt 2\n00a1\n", 2, 3),
            ("tt 2\n00001\n", 2, 5),
            ("tt 2\n0001\n\n", 3, 1),
            ("tt 2\n0001 \n", 2, 5),
            ("tt  2\n0001\n", 1, 4),
            ("tt 2", 2, 1),
        ];
        for (text, line, column) in cases {
            match parse_truth_table(text) {
                Err(Error::Parse {
                    line: l, column: c, ..
                }) => {
                    assert_eq!((l, c), (line, column), "{text:?}")
                }
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn constant_tables_parse_but_are_rejected_downstream() {
        let t = parse_truth_table("tt 2\n0000\n").unwrap();
        assert!(t.is_constant());
        assert!(matches!(
            ExplanationProblem::at_row(t, 1),
            Err(Error::ConstantFunction)
        ));
    }

    #[test]
    fn all_points_in_row_order() {
        let pts = all_points(1);
        assert_eq!(format!("{pts:?}"), "[(0), (1)]");
        let pts = all_points(2);
        assert_eq!(format!("{pts:?}"), "[(0,0), (0,1), (1,0), (1,1)]");
        let pts = all_points(4);
        assert_eq!(pts[0].to_string(), "(0,0,0,0)");
        assert_eq!(pts[8].to_string(), "(1,0,0,0)");
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(p.row_index(), k + 1);
        }
    }

    #[test]
    fn feature_set_basics() {
        let s: FeatureSet = [2, 3, 4].into_iter().collect();
        assert_eq!(s.to_string(), "{2,3,4}");
        assert_eq!(s.len(), 3);
        assert!(s.contains(3) && !s.contains(1));
        assert_eq!(s.complement(4), FeatureSet::singleton(1));
        assert_eq!(s.without(3).iter().collect::<Vec<_>>(), vec![2, 4]);
        assert!(!s.within(3));
        assert_eq!(serde_json::to_string(&s).unwrap(), "[2,3,4]");
    }

    #[test]
    fn row_bits_conversions_agree() {
        for m in 1..=5 {
            for bits in 0..1usize << m {
                let s = FeatureSet::from_row_bits(bits, m);
                assert_eq!(s.to_row_bits(m), bits);
                let p = Point::from_row_bits(m, bits);
                for i in 1..=m {
                    assert_eq!(p.get(i), s.contains(i));
                }
            }
        }
    }

    #[test]
    fn index_round_trip() {
        for k in 0..16u64 {
            let t = TruthTable::from_index(2, k).unwrap();
            assert_eq!(t.index(), Some(k));
        }
        assert_eq!(TruthTable::from_index(1, 1).unwrap().bitstring(), "01");
    }

    #[test]
    fn permutation_moves_features() {
        // κ = x1 on two features; swapping features yields κ = x2.
        let t = TruthTable::parse("tt 2\n0011").unwrap();
        let swapped = t.permuted(&[2, 1]).unwrap();
        assert_eq!(swapped.bitstring(), "0101");
        assert!(t.permuted(&[1, 1]).is_err());
    }

    #[test]
    fn json_mirrors_the_text_format() {
        let t = fig1();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"m":4,"values":"0110100000000000"}"#);
        let back: TruthTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<TruthTable>(r#"{"m":2,"values":"011"}"#).is_err());
    }
}
