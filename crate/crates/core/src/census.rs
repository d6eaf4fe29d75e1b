//! Census of issue frequencies over all boolean functions of a given arity.
//!
//! Every non-constant function on `m` features is audited at each of its
//! `2^m` instances. A function exhibits an issue when at least one of its
//! instances does. Counts are kept both per function and per instance, the
//! latter split by predicted class.
//!
//! Work is split into contiguous ranges of the function index space; each
//! worker fills a private [`IssueCounts`] and the partial counts are summed,
//! so the result does not depend on the number of workers. Long runs can
//! persist a checkpoint after every batch and resume from it.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{
    audit_instance, implications_hold, issue_bits, AttributionProfile, AuditRecord, Issue, Registry,
};
use crate::error::{Error, Result};
use crate::explain::{relevancy_from_sets, sets_from_lattice, weak_axp_lattice};
use crate::model::{ExplanationProblem, Point, TruthTable};
use crate::shapley::{scaled_from_table, PhiTable};

/// Largest arity for exhaustive runs.
pub const MAX_EXHAUSTIVE_M: usize = 4;
/// Largest arity for sampled runs.
pub const MAX_SAMPLED_M: usize = 5;

pub const DEFAULT_CHECKPOINT_EVERY: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CensusMode {
    Exhaustive,
    /// `samples` distinct functions drawn uniformly without replacement.
    Sampled {
        samples: u64,
    },
}

impl CensusMode {
    pub fn label(&self) -> &'static str {
        match self {
            CensusMode::Exhaustive => "exhaustive",
            CensusMode::Sampled { .. } => "sampled",
        }
    }
}

/// Number of non-constant boolean functions on `m` features.
pub fn non_constant_count(m: usize) -> u64 {
    (1u64 << (1u64 << m)) - 2
}

/// The function indices (see [`TruthTable::from_index`]) covered by a run,
/// in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionDomain {
    /// Every index in `1..=2^(2^m) - 2`.
    All {
        m: usize,
    },
    Sample {
        m: usize,
        indices: Vec<u64>,
    },
}

impl FunctionDomain {
    pub fn new(m: usize, mode: CensusMode, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::UnsupportedCensus("census needs m >= 1".into()));
        }
        match mode {
            CensusMode::Exhaustive => {
                if m > MAX_EXHAUSTIVE_M {
                    return Err(Error::UnsupportedCensus(format!(
                        "exhaustive census supports m <= {MAX_EXHAUSTIVE_M}, got {m}; use sampled mode"
                    )));
                }
                Ok(FunctionDomain::All { m })
            }
            CensusMode::Sampled { samples } => {
                if m > MAX_SAMPLED_M {
                    return Err(Error::UnsupportedCensus(format!(
                        "sampled census supports m <= {MAX_SAMPLED_M}, got {m}"
                    )));
                }
                let total = non_constant_count(m);
                if samples == 0 || samples > total {
                    return Err(Error::UnsupportedCensus(format!(
                        "sample size must be in 1..={total}, got {samples}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut indices: Vec<u64> =
                    rand::seq::index::sample(&mut rng, total as usize, samples as usize)
                        .into_iter()
                        .map(|k| k as u64 + 1)
                        .collect();
                indices.sort_unstable();
                Ok(FunctionDomain::Sample { m, indices })
            }
        }
    }

    pub fn m(&self) -> usize {
        match self {
            FunctionDomain::All { m } | FunctionDomain::Sample { m, .. } => *m,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            FunctionDomain::All { m } => non_constant_count(*m),
            FunctionDomain::Sample { indices, .. } => indices.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Function index at position `k` of the run.
    pub fn index(&self, k: u64) -> u64 {
        match self {
            FunctionDomain::All { .. } => k + 1,
            FunctionDomain::Sample { indices, .. } => indices[k as usize],
        }
    }

    pub fn tables(&self) -> impl Iterator<Item = TruthTable> + '_ {
        let m = self.m();
        (0..self.len()).map(move |k| TruthTable::from_index(m, self.index(k)).expect("m <= 6"))
    }
}

/// Non-constant tables on `m` features in the order a census visits them:
/// ascending bitstrings for exhaustive mode, a seeded sorted sample otherwise.
pub fn enumerate_functions(
    m: usize,
    mode: CensusMode,
    seed: u64,
) -> Result<impl Iterator<Item = TruthTable>> {
    let domain = FunctionDomain::new(m, mode, seed)?;
    Ok((0..domain.len())
        .map(move |k| TruthTable::from_index(domain.m(), domain.index(k)).expect("m <= 6")))
}

/// Issue flags of one instance from the integer fast path.
pub fn instance_issue_bits(e: &ExplanationProblem, registry: Registry) -> Result<u8> {
    let lattice = weak_axp_lattice(e);
    let rel = relevancy_from_sets(e.m(), &sets_from_lattice(e.m(), &lattice))?;
    let scaled = scaled_from_table(&PhiTable::new(e));
    let profile = AttributionProfile::new(rel.relevant, &scaled.numerators);
    Ok(issue_bits(&profile, registry))
}

/// Per-instance outcome of the census kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceOutcome {
    pub prediction: bool,
    pub issues: u8,
}

/// Fast audit of every instance of `t`, in row order.
pub fn audit_function_flags(t: &TruthTable, registry: Registry) -> Result<Vec<InstanceOutcome>> {
    if t.is_constant() {
        return Err(Error::ConstantFunction);
    }
    let m = t.m();
    (1..=1usize << m)
        .map(|row| {
            let e = ExplanationProblem::new(t.clone(), Point::from_row(m, row)?)?;
            Ok(InstanceOutcome {
                prediction: e.prediction(),
                issues: instance_issue_bits(&e, registry)?,
            })
        })
        .collect()
}

/// Full audit of one function through the reference path.
#[derive(Clone, Debug)]
pub struct FunctionAudit {
    /// Function-level flags: the OR over all instances, `I1` in bit 0.
    pub flags: u8,
    pub records: Vec<AuditRecord>,
}

impl FunctionAudit {
    pub fn exhibits(&self, issue: Issue) -> bool {
        self.flags >> issue.index() & 1 == 1
    }
}

pub fn audit_function(t: &TruthTable, registry: Registry) -> Result<FunctionAudit> {
    if t.is_constant() {
        return Err(Error::ConstantFunction);
    }
    let m = t.m();
    let records = (1..=1usize << m)
        .map(|row| audit_instance(&ExplanationProblem::at_row(t.clone(), row)?, registry))
        .collect::<Result<Vec<_>>>()?;
    let flags = records.iter().fold(0, |acc, r| acc | r.issues.bits());
    Ok(FunctionAudit { flags, records })
}

/// Additive counters of a (partial) census.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueCounts {
    pub functions: u64,
    pub instances: [u64; 2],
    pub issue_functions: [u64; 7],
    /// `issue_instances[k][c]`: instances of class `c` flagged with issue `k`.
    pub issue_instances: [[u64; 2]; 7],
    pub implication_violations: u64,
}

impl IssueCounts {
    pub fn merge(&mut self, other: &IssueCounts) {
        self.functions += other.functions;
        self.implication_violations += other.implication_violations;
        for c in 0..2 {
            self.instances[c] += other.instances[c];
        }
        for k in 0..7 {
            self.issue_functions[k] += other.issue_functions[k];
            for c in 0..2 {
                self.issue_instances[k][c] += other.issue_instances[k][c];
            }
        }
    }

    pub fn record(&mut self, outcomes: &[InstanceOutcome]) {
        self.functions += 1;
        let mut any = 0u8;
        for o in outcomes {
            let c = o.prediction as usize;
            self.instances[c] += 1;
            if !implications_hold(o.issues) {
                self.implication_violations += 1;
            }
            any |= o.issues;
            for k in 0..7 {
                if o.issues >> k & 1 == 1 {
                    self.issue_instances[k][c] += 1;
                }
            }
        }
        for k in 0..7 {
            if any >> k & 1 == 1 {
                self.issue_functions[k] += 1;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CensusConfig {
    pub m: usize,
    pub mode: CensusMode,
    pub seed: u64,
    pub workers: usize,
    pub registry: Registry,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: u64,
    /// Streams one JSON audit record per instance to this file.
    pub emit_instances: Option<PathBuf>,
    /// Stops after at least this many functions, leaving a checkpoint behind.
    pub stop_after: Option<u64>,
}

impl CensusConfig {
    pub fn new(m: usize, mode: CensusMode) -> Self {
        CensusConfig {
            m,
            mode,
            seed: 0,
            workers: 1,
            registry: Registry::default(),
            checkpoint: None,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            emit_instances: None,
            stop_after: None,
        }
    }
}

/// Aggregated census results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusStats {
    pub m: usize,
    pub mode: CensusMode,
    pub seed: u64,
    pub registry: Registry,
    /// Non-constant functions on `m` features, `2^(2^m) - 2`.
    pub functions_total: u64,
    /// Functions in this run: all of them, or the sample size.
    pub functions_planned: u64,
    pub counts: IssueCounts,
    /// Not serialized, so reports stay reproducible.
    pub elapsed: Duration,
}

impl CensusStats {
    pub fn complete(&self) -> bool {
        self.counts.functions == self.functions_planned
    }

    pub fn instances(&self) -> u64 {
        self.counts.instances[0] + self.counts.instances[1]
    }

    pub fn issue_functions(&self, issue: Issue) -> u64 {
        self.counts.issue_functions[issue.index()]
    }

    pub fn issue_instances(&self, issue: Issue) -> u64 {
        let [c0, c1] = self.counts.issue_instances[issue.index()];
        c0 + c1
    }

    pub fn issue_class_counts(&self, issue: Issue) -> [u64; 2] {
        self.counts.issue_instances[issue.index()]
    }

    /// Share of audited functions exhibiting `issue`, rounded to one decimal.
    pub fn function_pct(&self, issue: Issue) -> String {
        pct_tenths(self.issue_functions(issue), self.counts.functions)
    }

    pub fn instance_pct(&self, issue: Issue) -> String {
        pct_tenths(self.issue_instances(issue), self.instances())
    }

    /// `lo <= 100 * count / functions < hi`, decided in integers. Bounds are
    /// given in hundredths of a percent.
    pub fn function_share_in(&self, issue: Issue, lo_bp: u64, hi_bp: u64) -> bool {
        let c = self.issue_functions(issue) as u128 * 10_000;
        let n = self.counts.functions as u128;
        lo_bp as u128 * n <= c && c < hi_bp as u128 * n
    }
}

/// Percentage rounded half-up to one decimal.
fn pct_tenths(count: u64, total: u64) -> String {
    if total == 0 {
        return "0.0".into();
    }
    let (count, total) = (count as u128, total as u128);
    let tenths = (2000 * count + total) / (2 * total);
    format!("{}.{}", tenths / 10, tenths % 10)
}

impl Serialize for CensusStats {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::{SerializeMap, SerializeStruct};

        #[derive(Serialize)]
        struct IssueRow {
            functions: u64,
            pct: String,
            instances: u64,
            instance_pct: String,
            class0: u64,
            class1: u64,
        }

        struct Issues<'a>(&'a CensusStats);
        impl Serialize for Issues<'_> {
            fn serialize<S: serde::Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let s = self.0;
                let mut map = serializer.serialize_map(Some(7))?;
                for issue in Issue::ALL {
                    let [c0, c1] = s.issue_class_counts(issue);
                    map.serialize_entry(
                        issue.name(),
                        &IssueRow {
                            functions: s.issue_functions(issue),
                            pct: s.function_pct(issue),
                            instances: s.issue_instances(issue),
                            instance_pct: s.instance_pct(issue),
                            class0: c0,
                            class1: c1,
                        },
                    )?;
                }
                map.end()
            }
        }

        let provisional: Vec<&str> = self
            .registry
            .provisional()
            .into_iter()
            .map(Issue::name)
            .collect();
        let mut st = serializer.serialize_struct("CensusStats", 12)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("mode", self.mode.label())?;
        st.serialize_field("functions", &self.counts.functions)?;
        st.serialize_field("functions_total", &self.functions_total)?;
        st.serialize_field("complete", &self.complete())?;
        st.serialize_field("instances", &self.instances())?;
        st.serialize_field("class0_instances", &self.counts.instances[0])?;
        st.serialize_field("class1_instances", &self.counts.instances[1])?;
        st.serialize_field("issues", &Issues(self))?;
        st.serialize_field(
            "implication_violations",
            &self.counts.implication_violations,
        )?;
        st.serialize_field("registry_version", self.registry.version())?;
        st.serialize_field("provisional", &provisional)?;
        match self.mode {
            CensusMode::Exhaustive => st.serialize_field("seed", &Option::<u64>::None)?,
            CensusMode::Sampled { .. } => st.serialize_field("seed", &Some(self.seed))?,
        }
        st.end()
    }
}

/// Human-readable table with one row per issue.
impl fmt::Display for CensusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "census m={} ({}), {} of {} non-constant functions, {} instances, registry {}",
            self.m,
            self.mode.label(),
            self.counts.functions,
            self.functions_total,
            self.instances(),
            self.registry
        )?;
        writeln!(
            f,
            "{:<6}{:>12}{:>9}{:>12}{:>9}{:>10}{:>10}",
            "issue", "functions", "% fn", "instances", "% inst", "class 0", "class 1"
        )?;
        let provisional = self.registry.provisional();
        for issue in Issue::ALL {
            let [c0, c1] = self.issue_class_counts(issue);
            let name = if provisional.contains(&issue) {
                format!("{issue}*")
            } else {
                issue.to_string()
            };
            writeln!(
                f,
                "{:<6}{:>12}{:>9}{:>12}{:>9}{:>10}{:>10}",
                name,
                self.issue_functions(issue),
                self.function_pct(issue),
                self.issue_instances(issue),
                self.instance_pct(issue),
                c0,
                c1
            )?;
        }
        if !provisional.is_empty() {
            writeln!(f, "* provisional issue definition")?;
        }
        write!(
            f,
            "implication violations: {}",
            self.counts.implication_violations
        )
    }
}

/// Per-issue comparison of flagged instances across the two predicted
/// classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub exhaustive: bool,
    pub rows: Vec<ParityRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityRow {
    pub issue: String,
    pub class0: u64,
    pub class1: u64,
    /// `class1 - class0`.
    pub deviation: i64,
}

impl ParityReport {
    pub fn balanced(&self) -> bool {
        self.rows.iter().all(|r| r.deviation == 0)
    }
}

impl fmt::Display for ParityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let verdict = if r.deviation == 0 {
                "equal".to_string()
            } else {
                format!("deviation {:+}", r.deviation)
            };
            writeln!(
                f,
                "{}: class0={} class1={} {}",
                r.issue, r.class0, r.class1, verdict
            )?;
        }
        if !self.exhaustive {
            writeln!(
                f,
                "note: sampled run; class balance is only expected up to sampling error"
            )?;
        }
        Ok(())
    }
}

pub fn parity_report(stats: &CensusStats) -> ParityReport {
    ParityReport {
        exhaustive: stats.mode == CensusMode::Exhaustive && stats.complete(),
        rows: Issue::ALL
            .iter()
            .map(|&issue| {
                let [class0, class1] = stats.issue_class_counts(issue);
                ParityRow {
                    issue: issue.name().to_string(),
                    class0,
                    class1,
                    deviation: class1 as i64 - class0 as i64,
                }
            })
            .collect(),
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    m: usize,
    mode: CensusMode,
    seed: u64,
    registry: String,
    next: u64,
    counts: IssueCounts,
}

impl Checkpoint {
    fn matches(&self, config: &CensusConfig) -> std::result::Result<(), String> {
        if self.version != CHECKPOINT_VERSION {
            return Err(format!(
                "version {} (expected {CHECKPOINT_VERSION})",
                self.version
            ));
        }
        if self.m != config.m {
            return Err(format!("m = {} (requested {})", self.m, config.m));
        }
        if self.mode != config.mode {
            return Err(format!(
                "mode {:?} (requested {:?})",
                self.mode, config.mode
            ));
        }
        if matches!(self.mode, CensusMode::Sampled { .. }) && self.seed != config.seed {
            return Err(format!("seed {} (requested {})", self.seed, config.seed));
        }
        if self.registry != config.registry.version() {
            return Err(format!(
                "registry {} (requested {})",
                self.registry, config.registry
            ));
        }
        Ok(())
    }
}

fn load_checkpoint(path: &Path, config: &CensusConfig) -> Result<Option<Checkpoint>> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mismatch = |reason: String| Error::CheckpointMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| mismatch(format!("unreadable: {e}")))?;
    ckpt.matches(config).map_err(mismatch)?;
    Ok(Some(ckpt))
}

fn store_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(ckpt)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct ChunkResult {
    counts: IssueCounts,
    lines: Vec<String>,
}

fn process_range(
    domain: &FunctionDomain,
    range: std::ops::Range<u64>,
    registry: Registry,
    emit: bool,
) -> Result<ChunkResult> {
    let m = domain.m();
    let mut counts = IssueCounts::default();
    let mut lines = Vec::new();
    for k in range {
        let t = TruthTable::from_index(m, domain.index(k))?;
        let outcomes = audit_function_flags(&t, registry)?;
        counts.record(&outcomes);
        if emit {
            for row in 1..=1usize << m {
                let rec = audit_instance(&ExplanationProblem::at_row(t.clone(), row)?, registry)?;
                lines.push(serde_json::to_string(&rec)?);
            }
        }
    }
    Ok(ChunkResult { counts, lines })
}

/// Audits `range` with `workers` threads over contiguous sub-ranges; results
/// are combined in range order.
fn process_batch(
    domain: &FunctionDomain,
    range: std::ops::Range<u64>,
    workers: usize,
    registry: Registry,
    emit: bool,
) -> Result<ChunkResult> {
    let len = range.end - range.start;
    let workers = (workers as u64).clamp(1, len.max(1));
    let chunk = len.div_ceil(workers);
    let bounds: Vec<std::ops::Range<u64>> = (0..workers)
        .map(|w| {
            let lo = range.start + w * chunk;
            lo.min(range.end)..(lo + chunk).min(range.end)
        })
        .collect();
    let results: Vec<Result<ChunkResult>> = if workers == 1 {
        vec![process_range(domain, range, registry, emit)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = bounds
                .into_iter()
                .map(|r| scope.spawn(move || process_range(domain, r, registry, emit)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("census worker panicked"))
                .collect()
        })
    };
    let mut out = ChunkResult {
        counts: IssueCounts::default(),
        lines: Vec::new(),
    };
    for r in results {
        let r = r?;
        out.counts.merge(&r.counts);
        out.lines.extend(r.lines);
    }
    Ok(out)
}

/// Runs (or resumes) a census.
pub fn run_census(config: &CensusConfig) -> Result<CensusStats> {
    if config.workers == 0 {
        return Err(Error::UnsupportedCensus("workers must be >= 1".into()));
    }
    if config.checkpoint_every == 0 {
        return Err(Error::UnsupportedCensus(
            "checkpoint interval must be >= 1".into(),
        ));
    }
    let started = Instant::now();
    let domain = FunctionDomain::new(config.m, config.mode, config.seed)?;
    let total = domain.len();

    let (mut next, mut counts) = match &config.checkpoint {
        Some(path) => match load_checkpoint(path, config)? {
            Some(ckpt) => (ckpt.next, ckpt.counts),
            None => (0, IssueCounts::default()),
        },
        None => (0, IssueCounts::default()),
    };

    let mut sink = match &config.emit_instances {
        Some(path) => {
            let file = if next > 0 {
                OpenOptions::new().create(true).append(true).open(path)?
            } else {
                File::create(path)?
            };
            Some(BufWriter::new(file))
        }
        None => None,
    };

    let batch = if config.checkpoint.is_some() {
        config.checkpoint_every
    } else {
        total.max(1)
    };
    let stop = config.stop_after.map_or(total, |s| s.min(total));

    while next < stop {
        let end = (next + batch).min(total);
        let result = process_batch(
            &domain,
            next..end,
            config.workers,
            config.registry,
            sink.is_some(),
        )?;
        counts.merge(&result.counts);
        if let Some(w) = sink.as_mut() {
            for line in &result.lines {
                writeln!(w, "{line}")?;
            }
            w.flush()?;
        }
        next = end;
        if let Some(path) = &config.checkpoint {
            store_checkpoint(
                path,
                &Checkpoint {
                    version: CHECKPOINT_VERSION,
                    m: config.m,
                    mode: config.mode,
                    seed: config.seed,
                    registry: config.registry.version().to_string(),
                    next,
                    counts,
                },
            )?;
        }
    }

    Ok(CensusStats {
        m: config.m,
        mode: config.mode,
        seed: config.seed,
        registry: config.registry,
        functions_total: non_constant_count(config.m),
        functions_planned: total,
        counts,
        elapsed: started.elapsed(),
    })
}
