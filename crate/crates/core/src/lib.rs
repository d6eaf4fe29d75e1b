//! Exact formal explanations and Shapley values for boolean classifiers.
//!
//! A classifier is a complete truth table over `m` boolean features. For a
//! given instance the crate computes the abductive explanations (minimal sets
//! of features whose values guarantee the prediction), the contrastive
//! explanations (minimal sets of features whose freeing can flip it), the
//! resulting feature relevancy, and exact Shapley values under the uniform
//! input distribution. The [`audit`] module checks the two against each
//! other and [`census`] runs that audit over every boolean function of a
//! given arity.
//!
//! All arithmetic on Shapley values is exact.

pub mod audit;
pub mod census;
pub mod cli;
pub mod error;
pub mod explain;
pub mod model;
pub mod shapley;

pub use audit::{audit_instance, classify_issues, AuditRecord, Issue, IssueVector, Registry};
pub use census::{run_census, CensusConfig, CensusMode, CensusStats};
pub use error::{Error, Result};
pub use explain::{enumerate_axps, enumerate_cxps, relevancy, ExplanationSets, RelevancyReport};
pub use model::{ExplanationProblem, FeatureSet, Point, TruthTable};
pub use shapley::{shapley_values, Rational, ShapleyReport};
