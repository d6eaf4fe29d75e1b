//! Issue taxonomy: where exact Shapley values disagree with feature
//! relevancy.
//!
//! Each issue is a predicate over the relevant/irrelevant partition and the
//! exact Shapley values of one instance. Predicates only look at the sign of
//! each value and at the ordering of absolute values, so they are evaluated
//! on an [`AttributionProfile`] that can be built from rationals or from the
//! scaled integers of the census fast path alike.
//!
//! Issue sets are registered per [`Registry`] so that alternative wordings
//! can coexist and every report names the one it used.

use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::explain::{check_mhs_duality, explanation_sets, relevancy_from_sets, RelevancyReport};
use crate::model::{ExplanationProblem, FeatureSet, MAX_FEATURES};
use crate::shapley::{shapley_values, ShapleyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Issue {
    I1,
    I2,
    I3,
    I4,
    I5,
    I6,
    I7,
}

impl Issue {
    pub const ALL: [Issue; 7] = [
        Issue::I1,
        Issue::I2,
        Issue::I3,
        Issue::I4,
        Issue::I5,
        Issue::I6,
        Issue::I7,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["I1", "I2", "I3", "I4", "I5", "I6", "I7"][self.index()]
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign and absolute-value rank of every feature's Shapley value, plus the
/// relevancy partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttributionProfile {
    m: usize,
    relevant: FeatureSet,
    sign: [i8; MAX_FEATURES],
    /// Dense rank of `|Sv(i)|`: equal magnitudes share a rank, zero has rank 0
    /// only if some value is zero.
    rank: [u8; MAX_FEATURES],
}

impl AttributionProfile {
    pub fn new<T: Signed + Ord>(relevant: FeatureSet, values: &[T]) -> Self {
        let m = values.len();
        assert!(m <= MAX_FEATURES);
        let mut sign = [0i8; MAX_FEATURES];
        let mut rank = [0u8; MAX_FEATURES];
        let abs: Vec<T> = values.iter().map(Signed::abs).collect();
        let mut sorted: Vec<&T> = abs.iter().collect();
        sorted.sort();
        sorted.dedup();
        for (k, v) in values.iter().enumerate() {
            sign[k] = if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            };
            rank[k] = sorted.binary_search(&&abs[k]).unwrap() as u8;
        }
        AttributionProfile {
            m,
            relevant,
            sign,
            rank,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn relevant(&self) -> FeatureSet {
        self.relevant
    }

    pub fn irrelevant(&self) -> FeatureSet {
        self.relevant.complement(self.m)
    }

    fn zero(&self, i: usize) -> bool {
        self.sign[i - 1] == 0
    }

    /// `|Sv(a)| > |Sv(b)|`.
    fn dominates(&self, a: usize, b: usize) -> bool {
        self.rank[a - 1] > self.rank[b - 1]
    }

    fn same_sign(&self, a: usize, b: usize) -> bool {
        self.sign[a - 1] != 0 && self.sign[a - 1] == self.sign[b - 1]
    }

    fn first_irrelevant(&self, pred: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        self.irrelevant().iter().find(|&i| pred(i)).map(|i| vec![i])
    }

    fn first_relevant(&self, pred: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        self.relevant.iter().find(|&j| pred(j)).map(|j| vec![j])
    }

    /// Smallest (irrelevant, relevant) pair satisfying `pred`.
    fn first_pair(&self, pred: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
        self.irrelevant()
            .iter()
            .flat_map(|i| self.relevant.iter().map(move |j| (i, j)))
            .find(|&(i, j)| pred(i, j))
            .map(|(i, j)| vec![i, j])
    }
}

type Predicate = fn(&AttributionProfile) -> Option<Vec<usize>>;

/// One registered issue: the predicate returns the witnessing features when
/// the issue occurs.
pub struct IssueDef {
    pub issue: Issue,
    pub description: &'static str,
    pub provisional: bool,
    pub predicate: Predicate,
}

fn irrelevant_nonzero(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_irrelevant(|i| !p.zero(i))
}

fn irrelevant_beats_relevant(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_pair(|i, j| p.dominates(i, j))
}

fn relevant_zero(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_relevant(|j| p.zero(j))
}

fn irrelevant_nonzero_and_relevant_zero(p: &AttributionProfile) -> Option<Vec<usize>> {
    let mut w = irrelevant_nonzero(p)?;
    w.extend(relevant_zero(p)?);
    Some(w)
}

fn irrelevant_beats_all_relevant(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_irrelevant(|i| p.relevant.iter().all(|j| p.dominates(i, j)))
}

fn irrelevant_strict_maximum(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_irrelevant(|i| (1..=p.m).all(|j| j == i || p.dominates(i, j)))
}

fn irrelevant_at_least_relevant(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_pair(|i, j| !p.dominates(j, i))
}

fn irrelevant_beats_all_relevant_same_sign(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_irrelevant(|i| {
        p.relevant
            .iter()
            .all(|j| p.dominates(i, j) && p.sign[i - 1] == p.sign[j - 1])
    })
}

fn irrelevant_shares_relevant_sign(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_pair(|i, j| p.same_sign(i, j))
}

fn irrelevant_beats_relevant_same_sign(p: &AttributionProfile) -> Option<Vec<usize>> {
    p.first_pair(|i, j| p.dominates(i, j) && p.same_sign(i, j))
}

static DEFAULT_V1: [IssueDef; 7] = [
    IssueDef {
        issue: Issue::I1,
        description: "irrelevant feature with non-zero Shapley value",
        provisional: false,
        predicate: irrelevant_nonzero,
    },
    IssueDef {
        issue: Issue::I2,
        description: "irrelevant feature with larger |Sv| than some relevant feature",
        provisional: false,
        predicate: irrelevant_beats_relevant,
    },
    IssueDef {
        issue: Issue::I3,
        description: "relevant feature with zero Shapley value",
        provisional: false,
        predicate: relevant_zero,
    },
    IssueDef {
        issue: Issue::I4,
        description:
            "irrelevant feature with non-zero and relevant feature with zero Shapley value",
        provisional: false,
        predicate: irrelevant_nonzero_and_relevant_zero,
    },
    IssueDef {
        issue: Issue::I5,
        description: "irrelevant feature with larger |Sv| than every relevant feature",
        provisional: false,
        predicate: irrelevant_beats_all_relevant,
    },
    IssueDef {
        issue: Issue::I6,
        description: "irrelevant feature with |Sv| at least that of some relevant feature",
        provisional: true,
        predicate: irrelevant_at_least_relevant,
    },
    IssueDef {
        issue: Issue::I7,
        description:
            "irrelevant feature with larger |Sv| than, and the same sign as, every relevant feature",
        provisional: true,
        predicate: irrelevant_beats_all_relevant_same_sign,
    },
];

static TABLE3_V1: [IssueDef; 7] = [
    IssueDef {
        issue: Issue::I1,
        description: "irrelevant feature with non-zero Shapley value",
        provisional: false,
        predicate: irrelevant_nonzero,
    },
    IssueDef {
        issue: Issue::I2,
        description: "irrelevant feature with larger |Sv| than some relevant feature",
        provisional: false,
        predicate: irrelevant_beats_relevant,
    },
    IssueDef {
        issue: Issue::I3,
        description: "relevant feature with zero Shapley value",
        provisional: false,
        predicate: relevant_zero,
    },
    IssueDef {
        issue: Issue::I4,
        description:
            "irrelevant feature with non-zero and relevant feature with zero Shapley value",
        provisional: false,
        predicate: irrelevant_nonzero_and_relevant_zero,
    },
    IssueDef {
        issue: Issue::I5,
        description: "irrelevant feature with strictly the largest |Sv| of all features",
        provisional: false,
        predicate: irrelevant_strict_maximum,
    },
    IssueDef {
        issue: Issue::I6,
        description:
            "irrelevant and relevant features with non-zero Shapley values of the same sign",
        provisional: true,
        predicate: irrelevant_shares_relevant_sign,
    },
    IssueDef {
        issue: Issue::I7,
        description: "irrelevant feature with larger |Sv| than a relevant feature of the same sign",
        provisional: true,
        predicate: irrelevant_beats_relevant_same_sign,
    },
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Registry {
    DefaultV1,
    #[default]
    Table3V1,
}

impl Registry {
    pub fn version(self) -> &'static str {
        match self {
            Registry::DefaultV1 => "default-v1",
            Registry::Table3V1 => "table3-v1",
        }
    }

    pub fn definitions(self) -> &'static [IssueDef; 7] {
        match self {
            Registry::DefaultV1 => &DEFAULT_V1,
            Registry::Table3V1 => &TABLE3_V1,
        }
    }

    pub fn provisional(self) -> Vec<Issue> {
        self.definitions()
            .iter()
            .filter(|d| d.provisional)
            .map(|d| d.issue)
            .collect()
    }
}

impl FromStr for Registry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default-v1" | "default" => Ok(Registry::DefaultV1),
            "table3-v1" | "table3" => Ok(Registry::Table3V1),
            other => Err(format!(
                "unknown registry {other:?} (expected default-v1 or table3-v1)"
            )),
        }
    }
}

impl fmt::Display for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.version())
    }
}

/// Issue flags of one instance with their witnessing features.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IssueVector {
    witnesses: [Option<Vec<usize>>; 7],
}

impl IssueVector {
    pub fn get(&self, issue: Issue) -> bool {
        self.witnesses[issue.index()].is_some()
    }

    pub fn witness(&self, issue: Issue) -> Option<&[usize]> {
        self.witnesses[issue.index()].as_deref()
    }

    /// Flags packed as bits, `I1` in bit 0.
    pub fn bits(&self) -> u8 {
        Issue::ALL
            .iter()
            .filter(|&&i| self.get(i))
            .fold(0, |acc, &i| acc | 1 << i.index())
    }

    pub fn any(&self) -> bool {
        self.bits() != 0
    }

    /// `I4 ⇒ I3` and `I5 ⇒ I2`.
    pub fn implications_hold(&self) -> bool {
        implications_hold(self.bits())
    }
}

pub fn implications_hold(bits: u8) -> bool {
    let has = |i: Issue| bits >> i.index() & 1 == 1;
    (!has(Issue::I4) || has(Issue::I3)) && (!has(Issue::I5) || has(Issue::I2))
}

/// Flags only, without witnesses; used on the census hot path.
pub fn issue_bits(profile: &AttributionProfile, registry: Registry) -> u8 {
    registry
        .definitions()
        .iter()
        .filter(|d| (d.predicate)(profile).is_some())
        .fold(0, |acc, d| acc | 1 << d.issue.index())
}

impl Serialize for IssueVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(7))?;
        for i in Issue::ALL {
            map.serialize_entry(i.name(), &self.get(i))?;
        }
        map.end()
    }
}

struct Witnesses<'a>(&'a IssueVector);

impl Serialize for Witnesses<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        for i in Issue::ALL {
            if let Some(w) = self.0.witness(i) {
                map.serialize_entry(i.name(), w)?;
            }
        }
        map.end()
    }
}

pub fn classify_profile(profile: &AttributionProfile, registry: Registry) -> Result<IssueVector> {
    if profile.relevant().is_empty() {
        return Err(Error::Invariant("no relevant feature".into()));
    }
    let mut out = IssueVector::default();
    for def in registry.definitions() {
        out.witnesses[def.issue.index()] = (def.predicate)(profile);
    }
    if !out.implications_hold() {
        return Err(Error::Invariant(format!(
            "issue implications violated: {:07b}",
            out.bits()
        )));
    }
    Ok(out)
}

/// Evaluates every issue of `registry` on one instance.
pub fn classify_issues(
    rel: &RelevancyReport,
    sv: &ShapleyReport,
    registry: Registry,
) -> Result<IssueVector> {
    classify_profile(&AttributionProfile::new(rel.relevant, &sv.sv), registry)
}

/// Full audit of one explanation problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditRecord {
    pub m: usize,
    pub function: String,
    pub instance_row: usize,
    pub prediction: bool,
    pub relevancy: RelevancyReport,
    pub shapley: ShapleyReport,
    pub issues: IssueVector,
    pub registry: Registry,
}

impl Serialize for AuditRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let sv: Vec<String> = self.shapley.sv.iter().map(ToString::to_string).collect();
        let mut st = serializer.serialize_struct("AuditRecord", 10)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("function", &self.function)?;
        st.serialize_field("instance_row", &self.instance_row)?;
        st.serialize_field("prediction", &(self.prediction as u8))?;
        st.serialize_field("relevant", &self.relevancy.relevant)?;
        st.serialize_field("irrelevant", &self.relevancy.irrelevant)?;
        st.serialize_field("sv", &sv)?;
        st.serialize_field("issues", &self.issues)?;
        st.serialize_field("witnesses", &Witnesses(&self.issues))?;
        st.serialize_field("registry_version", self.registry.version())?;
        st.end()
    }
}

pub fn audit_instance(e: &ExplanationProblem, registry: Registry) -> Result<AuditRecord> {
    let sets = explanation_sets(e);
    if !check_mhs_duality(&sets) {
        return Err(Error::Invariant(format!(
            "AXps {:?} and CXps {:?} are not hitting-set duals",
            sets.axps, sets.cxps
        )));
    }
    let relevancy = relevancy_from_sets(e.m(), &sets)?;
    let shapley = shapley_values(e)?;
    let issues = classify_issues(&relevancy, &shapley, registry)?;
    Ok(AuditRecord {
        m: e.m(),
        function: e.table().bitstring(),
        instance_row: e.instance().row_index(),
        prediction: e.prediction(),
        relevancy,
        shapley,
        issues,
        registry,
    })
}
