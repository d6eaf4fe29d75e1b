//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal invariant violation, 2 bad input file or
//! parameters, 3 constant classifier, 4 bad instance, 5 checkpoint mismatch.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::audit::{audit_instance, implications_hold, Registry};
use crate::census::{
    enumerate_functions, parity_report, run_census, CensusConfig, CensusMode,
    DEFAULT_CHECKPOINT_EVERY,
};
use crate::error::Error;
use crate::explain::{
    check_irrelevance_formula, check_mhs_duality, explanation_sets, relevancy_from_sets,
};
use crate::model::{ExplanationProblem, FeatureSet, Point, TruthTable};
use crate::shapley::{fraction_string, shapley_scaled, shapley_values, to_f64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONSTANT: i32 = 3;
pub const EXIT_INSTANCE: i32 = 4;
pub const EXIT_CHECKPOINT: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "xpaudit",
    version,
    about = "Formal explanations and exact Shapley values for truth-table classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List AXps, CXps and feature relevancy for one instance.
    Explain(InstanceArgs),
    /// Exact Shapley values for one instance.
    Shapley(InstanceArgs),
    /// Check one instance against the issue registry.
    Audit(InstanceArgs),
    /// Audit every non-constant function on m features.
    Census(CensusArgs),
    /// Exhaustive consistency checks over all small functions.
    Selfcheck(SelfcheckArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Table,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[default]
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Truth table in `.tt` format.
    #[arg(long)]
    pub input: PathBuf,
    /// Instance as comma-separated bits, e.g. `0,0,0,0`.
    #[arg(long, conflicts_with = "row")]
    pub instance: Option<String>,
    /// Instance as a 1-based row of the truth table.
    #[arg(long)]
    pub row: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long, default_value = "table3-v1")]
    pub registry: Registry,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    /// Number of features.
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
    /// Number of functions drawn in sampled mode.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value = "table3-v1")]
    pub registry: Registry,
    /// Resumable state file, written after every batch.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_EVERY)]
    pub checkpoint_every: u64,
    /// Stream one JSON audit record per instance to this file.
    #[arg(long)]
    pub emit_instances: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Largest arity checked exhaustively.
    #[arg(long, default_value_t = 3)]
    pub max_m: usize,
}

/// How a point is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceSpec {
    Bits(String),
    Row(usize),
}

/// Resolved configuration of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub instance: Option<InstanceSpec>,
    pub format: Format,
    pub registry: Registry,
    pub census: Option<CensusConfig>,
    pub output: Option<PathBuf>,
    pub selfcheck_max_m: usize,
}

impl RunConfig {
    fn for_instance(args: &InstanceArgs) -> RunConfig {
        let instance = match (&args.instance, args.row) {
            (Some(bits), _) => Some(InstanceSpec::Bits(bits.clone())),
            (None, Some(row)) => Some(InstanceSpec::Row(row)),
            (None, None) => None,
        };
        RunConfig {
            input: Some(args.input.clone()),
            instance,
            format: args.format,
            registry: args.registry,
            census: None,
            output: None,
            selfcheck_max_m: 0,
        }
    }

    fn for_census(args: &CensusArgs) -> RunConfig {
        let mode = match args.mode {
            ModeArg::Exhaustive => CensusMode::Exhaustive,
            ModeArg::Sampled => CensusMode::Sampled {
                samples: args.samples,
            },
        };
        let census = CensusConfig {
            m: args.m,
            mode,
            seed: args.seed,
            workers: args.workers,
            registry: args.registry,
            checkpoint: args.checkpoint.clone(),
            checkpoint_every: args.checkpoint_every,
            emit_instances: args.emit_instances.clone(),
            stop_after: None,
        };
        RunConfig {
            input: None,
            instance: None,
            format: args.format,
            registry: args.registry,
            census: Some(census),
            output: args.output.clone(),
            selfcheck_max_m: 0,
        }
    }
}

/// A failed command: exit code plus one-line diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ConstantFunction => EXIT_CONSTANT,
            Error::DimensionMismatch { .. } | Error::RowOutOfRange { .. } => EXIT_INSTANCE,
            Error::CheckpointMismatch { .. } => EXIT_CHECKPOINT,
            Error::Invariant(_) => EXIT_INVARIANT,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

pub type CmdResult = std::result::Result<String, Failure>;

fn load_table(config: &RunConfig) -> std::result::Result<TruthTable, Failure> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_INPUT, "no --input given"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    TruthTable::parse(&text)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn load_problem(config: &RunConfig) -> std::result::Result<ExplanationProblem, Failure> {
    let table = load_table(config)?;
    if table.is_constant() {
        return Err(Error::ConstantFunction.into());
    }
    let point = match &config.instance {
        None => {
            return Err(Failure::new(
                EXIT_INSTANCE,
                "no instance given (use --instance or --row)",
            ))
        }
        Some(InstanceSpec::Row(row)) => Point::from_row(table.m(), *row),
        Some(InstanceSpec::Bits(bits)) => bits.parse::<Point>(),
    }
    .map_err(|e| Failure::new(EXIT_INSTANCE, format!("bad instance: {e}")))?;
    ExplanationProblem::new(table, point).map_err(|e| match e {
        Error::DimensionMismatch { .. } => {
            Failure::new(EXIT_INSTANCE, format!("bad instance: {e}"))
        }
        other => other.into(),
    })
}

fn set_list(sets: &[FeatureSet]) -> String {
    let inner: Vec<String> = sets.iter().map(ToString::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn bits_of(p: &Point) -> Vec<u8> {
    p.coordinates().iter().map(|&b| b as u8).collect()
}

fn header(e: &ExplanationProblem) -> String {
    format!(
        "function: tt {} {}\ninstance: {} (row {}), prediction {}\n",
        e.m(),
        e.table().bitstring(),
        e.instance(),
        e.instance().row_index(),
        e.prediction() as u8
    )
}

pub fn cmd_explain(config: &RunConfig) -> CmdResult {
    let e = load_problem(config)?;
    let sets = explanation_sets(&e);
    let duality = check_mhs_duality(&sets);
    if !duality {
        return Err(Failure::new(
            EXIT_INVARIANT,
            format!(
                "AXps {:?} and CXps {:?} are not hitting-set duals",
                sets.axps, sets.cxps
            ),
        ));
    }
    let rel = relevancy_from_sets(e.m(), &sets)?;
    Ok(match config.format {
        Format::Json => {
            json!({
                "m": e.m(),
                "function": e.table().bitstring(),
                "instance": bits_of(e.instance()),
                "instance_row": e.instance().row_index(),
                "prediction": e.prediction() as u8,
                "axps": sets.axps,
                "cxps": sets.cxps,
                "relevant": rel.relevant,
                "irrelevant": rel.irrelevant,
                "mhs_duality": duality,
            })
            .to_string()
                + "\n"
        }
        Format::Table => format!(
            "{}AXps: {}\nCXps: {}\nrelevant: {}\nirrelevant: {}\n",
            header(&e),
            set_list(&sets.axps),
            set_list(&sets.cxps),
            rel.relevant,
            rel.irrelevant
        ),
    })
}

pub fn cmd_shapley(config: &RunConfig) -> CmdResult {
    let e = load_problem(config)?;
    let report = shapley_values(&e)?;
    let leader = report.strict_abs_max();
    let total: crate::shapley::Rational = report.sv.iter().sum();
    Ok(match config.format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).map_err(Error::from)?;
            v["m"] = json!(e.m());
            v["function"] = json!(e.table().bitstring());
            v["instance_row"] = json!(e.instance().row_index());
            v["strict_abs_max"] = json!(leader);
            v["efficiency"] = json!(report.efficiency_holds());
            v.to_string() + "\n"
        }
        Format::Table => {
            let mut out = header(&e);
            writeln!(out, "{report}").unwrap();
            for (k, sv) in report.sv.iter().enumerate() {
                let mark = if leader == Some(k + 1) {
                    "  <- strictly largest |Sv|"
                } else {
                    ""
                };
                writeln!(
                    out,
                    "  feature {}: {:>12} {:>+10.6}{mark}",
                    k + 1,
                    fraction_string(sv),
                    to_f64(sv)
                )
                .unwrap();
            }
            writeln!(
                out,
                "efficiency: sum Sv = {} = {} - {} ({})",
                total,
                e.prediction() as u8,
                report.phi_empty,
                if report.efficiency_holds() {
                    "ok"
                } else {
                    "VIOLATED"
                }
            )
            .unwrap();
            out
        }
    })
}

pub fn cmd_audit(config: &RunConfig) -> CmdResult {
    let e = load_problem(config)?;
    let rec = audit_instance(&e, config.registry)?;
    Ok(match config.format {
        Format::Json => serde_json::to_string(&rec).map_err(Error::from)? + "\n",
        Format::Table => {
            let mut out = header(&e);
            writeln!(
                out,
                "relevant: {}  irrelevant: {}",
                rec.relevancy.relevant, rec.relevancy.irrelevant
            )
            .unwrap();
            writeln!(out, "{}", rec.shapley).unwrap();
            writeln!(out, "registry: {}", rec.registry).unwrap();
            let provisional = rec.registry.provisional();
            for def in rec.registry.definitions() {
                let issue = def.issue;
                let flag = if rec.issues.get(issue) { "yes" } else { "no" };
                let witness = rec
                    .issues
                    .witness(issue)
                    .map(|w| format!(" witness {w:?}"))
                    .unwrap_or_default();
                let note = if provisional.contains(&issue) {
                    " (provisional)"
                } else {
                    ""
                };
                writeln!(out, "{issue}: {flag:<3} {}{note}{witness}", def.description).unwrap();
            }
            out
        }
    })
}

pub fn cmd_census(config: &RunConfig) -> CmdResult {
    let census = config
        .census
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_INPUT, "missing census parameters"))?;
    let stats = run_census(census)?;
    let report = serde_json::to_string_pretty(&stats).map_err(Error::from)? + "\n";
    if let Some(path) = &config.output {
        fs::write(path, &report)
            .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    }
    let parity = parity_report(&stats);
    Ok(match config.format {
        Format::Json => report,
        Format::Table => format!(
            "{stats}\nclass parity:\n{parity}elapsed: {:.2}s\n",
            stats.elapsed.as_secs_f64()
        ),
    })
}

/// Counters of [`selfcheck`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelfcheckSummary {
    pub problems: u64,
    pub failures: Vec<String>,
}

/// Exhaustive consistency checks over every non-constant function with at
/// most `max_m` features and every instance.
pub fn selfcheck(max_m: usize) -> std::result::Result<SelfcheckSummary, Error> {
    let mut summary = SelfcheckSummary::default();
    for m in 1..=max_m {
        for t in enumerate_functions(m, CensusMode::Exhaustive, 0)? {
            for row in 1..=1usize << m {
                let e = ExplanationProblem::at_row(t.clone(), row)?;
                summary.problems += 1;
                let mut fail = |what: &str| {
                    summary
                        .failures
                        .push(format!("{what}: {:?} row {row}", e.table()))
                };
                let sets = explanation_sets(&e);
                if !check_mhs_duality(&sets) {
                    fail("duality");
                }
                let rel = match relevancy_from_sets(m, &sets) {
                    Ok(rel) => rel,
                    Err(_) => {
                        fail("relevancy");
                        continue;
                    }
                };
                for p in 1..=m {
                    if check_irrelevance_formula(&e, p)? != rel.irrelevant.contains(p) {
                        fail("irrelevance formula");
                    }
                }
                match shapley_values(&e) {
                    Ok(sv) => {
                        if shapley_scaled(&e).to_rationals() != sv.sv {
                            fail("scaled Shapley path");
                        }
                    }
                    Err(_) => fail("efficiency"),
                }
                for registry in [Registry::DefaultV1, Registry::Table3V1] {
                    match audit_instance(&e, registry) {
                        Ok(rec) if implications_hold(rec.issues.bits()) => {}
                        _ => fail("issue implications"),
                    }
                }
            }
        }
    }
    Ok(summary)
}

pub fn cmd_selfcheck(config: &RunConfig) -> CmdResult {
    let max_m = config.selfcheck_max_m;
    if max_m == 0 || max_m > 4 {
        return Err(Failure::new(
            EXIT_INPUT,
            format!("--max-m must be in 1..=4, got {max_m}"),
        ));
    }
    let summary = selfcheck(max_m)?;
    if let Some(first) = summary.failures.first() {
        return Err(Failure::new(
            EXIT_INVARIANT,
            format!("{} check(s) failed, first: {first}", summary.failures.len()),
        ));
    }
    Ok(format!(
        "selfcheck: {} problems with m <= {max_m}: duality, relevancy, irrelevance formula, efficiency, scaled path and issue implications all hold\n",
        summary.problems
    ))
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Explain(args) => cmd_explain(&RunConfig::for_instance(args)),
        Command::Shapley(args) => cmd_shapley(&RunConfig::for_instance(args)),
        Command::Audit(args) => cmd_audit(&RunConfig::for_instance(args)),
        Command::Census(args) => cmd_census(&RunConfig::for_census(args)),
        Command::Selfcheck(args) => cmd_selfcheck(&RunConfig {
            input: None,
            instance: None,
            format: Format::Table,
            registry: Registry::default(),
            census: None,
            output: None,
            selfcheck_max_m: args.max_m,
        }),
    }
}
