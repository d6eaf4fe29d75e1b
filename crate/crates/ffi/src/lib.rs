//! C ABI over the `xpaudit` engine.
//!
//! Tables and explanation problems are opaque heap handles created by the
//! `*_new`/`*_parse` functions and released with the matching `*_free`.
//! Every fallible function returns an [`XpStatus`]; on failure a description
//! is available from [`xp_last_error`] on the same thread. Feature sets cross
//! the boundary as bitmasks, bit `i - 1` standing for feature `i`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xpaudit::census::IssueCounts;
use xpaudit::shapley::ShapleyReport;
use xpaudit::{
    audit_instance, enumerate_axps, enumerate_cxps, relevancy, run_census, shapley_values,
    CensusConfig, CensusMode, Error, ExplanationProblem, FeatureSet, Point, Registry, TruthTable,
};

/// Status codes. The first six mirror the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XpStatus {
    Ok = 0,
    Invariant = 1,
    Input = 2,
    Constant = 3,
    Instance = 4,
    Checkpoint = 5,
    NullArgument = 6,
    BufferTooSmall = 7,
    /// An exact value does not fit the requested integer type.
    Overflow = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XpRegistry {
    Table3V1 = 0,
    DefaultV1 = 1,
}

impl From<XpRegistry> for Registry {
    fn from(r: XpRegistry) -> Self {
        match r {
            XpRegistry::Table3V1 => Registry::Table3V1,
            XpRegistry::DefaultV1 => Registry::DefaultV1,
        }
    }
}

/// A classifier given by its complete truth table.
pub struct XpTable {
    table: TruthTable,
}

/// A table together with an instance; Shapley values are computed once.
pub struct XpProblem {
    problem: ExplanationProblem,
    shapley: Option<ShapleyReport>,
}

/// Census counters; index `k` of the per-issue arrays is issue `I(k+1)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct XpCensusCounts {
    pub functions: u64,
    pub instances_class0: u64,
    pub instances_class1: u64,
    pub issue_functions: [u64; 7],
    pub issue_instances_class0: [u64; 7],
    pub issue_instances_class1: [u64; 7],
    pub implication_violations: u64,
}

impl From<&IssueCounts> for XpCensusCounts {
    fn from(c: &IssueCounts) -> Self {
        XpCensusCounts {
            functions: c.functions,
            instances_class0: c.instances[0],
            instances_class1: c.instances[1],
            issue_functions: c.issue_functions,
            issue_instances_class0: c.issue_instances.map(|x| x[0]),
            issue_instances_class1: c.issue_instances.map(|x| x[1]),
            implication_violations: c.implication_violations,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

struct Failure(XpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ConstantFunction => XpStatus::Constant,
            Error::DimensionMismatch { .. } | Error::RowOutOfRange { .. } => XpStatus::Instance,
            Error::CheckpointMismatch { .. } => XpStatus::Checkpoint,
            Error::Invariant(_) => XpStatus::Invariant,
            _ => XpStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(XpStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, records any failure or panic and turns it into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> XpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XpStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            XpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn bytes<'a>(p: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn problem_handle(problem: ExplanationProblem) -> *mut XpProblem {
    Box::into_raw(Box::new(XpProblem {
        problem,
        shapley: None,
    }))
}

/// Copies `masks` into `buf` when it fits; `len` always receives the count.
unsafe fn write_masks(
    sets: &[FeatureSet],
    buf: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> Result<(), Failure> {
    *out(len, "len")? = sets.len();
    if sets.len() > capacity {
        return Err(Failure(
            XpStatus::BufferTooSmall,
            format!("{} sets, capacity {capacity}", sets.len()),
        ));
    }
    if sets.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    let dst = std::slice::from_raw_parts_mut(buf, sets.len());
    for (d, s) in dst.iter_mut().zip(sets) {
        *d = s.bits();
    }
    Ok(())
}

/// Copies `text` plus a NUL terminator into `buf`; `needed` receives the
/// full size including the terminator.
unsafe fn write_string(
    text: &str,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> Result<(), Failure> {
    let size = text.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = size;
    }
    if size > capacity {
        return Err(Failure(
            XpStatus::BufferTooSmall,
            format!("{size} bytes needed, capacity {capacity}"),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message into `buf` and returns its
/// length in bytes, excluding the terminator. The message is truncated if
/// `capacity` is too small; pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn xp_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a table in the text format (`tt <m>` followed by the bit rows).
///
/// # Safety
/// `text` must be a NUL-terminated string and `table` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_table_parse(text: *const c_char, table: *mut *mut XpTable) -> XpStatus {
    guard(|| {
        let slot = out(table, "table")?;
        *slot = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(XpStatus::Input, format!("text is not UTF-8: {e}")))?;
        let parsed = TruthTable::parse(text)?;
        *slot = Box::into_raw(Box::new(XpTable { table: parsed }));
        Ok(())
    })
}

/// Builds a table from `2^m` output bytes (zero or one), row 1 first.
///
/// # Safety
/// `values` must be valid for `len` bytes and `table` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_table_new(
    m: usize,
    values: *const u8,
    len: usize,
    table: *mut *mut XpTable,
) -> XpStatus {
    guard(|| {
        let slot = out(table, "table")?;
        *slot = ptr::null_mut();
        let raw = bytes(values, len, "values")?;
        if let Some(bad) = raw.iter().find(|&&b| b > 1) {
            return Err(Failure(
                XpStatus::Input,
                format!("table value {bad} is not 0 or 1"),
            ));
        }
        let built = TruthTable::new(m, raw.iter().map(|&b| b == 1).collect())?;
        *slot = Box::into_raw(Box::new(XpTable { table: built }));
        Ok(())
    })
}

/// Number of features, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xp_table_features(table: *const XpTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.m())
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xp_table_free(table: *mut XpTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Explanation problem for the instance at 1-based `row` of the table.
///
/// # Safety
/// `table` must be a live handle and `problem` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_from_row(
    table: *const XpTable,
    row: usize,
    problem: *mut *mut XpProblem,
) -> XpStatus {
    guard(|| {
        let slot = out(problem, "problem")?;
        *slot = ptr::null_mut();
        let t = deref(table, "table")?;
        *slot = problem_handle(ExplanationProblem::at_row(t.table.clone(), row)?);
        Ok(())
    })
}

/// Explanation problem for an instance given as `len` bytes (zero or one).
///
/// # Safety
/// `table` must be a live handle, `point` valid for `len` bytes and
/// `problem` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_from_point(
    table: *const XpTable,
    point: *const u8,
    len: usize,
    problem: *mut *mut XpProblem,
) -> XpStatus {
    guard(|| {
        let slot = out(problem, "problem")?;
        *slot = ptr::null_mut();
        let t = deref(table, "table")?;
        let raw = bytes(point, len, "point")?;
        if let Some(bad) = raw.iter().find(|&&b| b > 1) {
            return Err(Failure(
                XpStatus::Instance,
                format!("coordinate {bad} is not 0 or 1"),
            ));
        }
        let v = Point::new(raw.iter().map(|&b| b == 1).collect());
        *slot = problem_handle(ExplanationProblem::new(t.table.clone(), v)?);
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_free(problem: *mut XpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle and `prediction` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_prediction(
    problem: *const XpProblem,
    prediction: *mut u8,
) -> XpStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        *out(prediction, "prediction")? = p.problem.prediction() as u8;
        Ok(())
    })
}

/// Writes the abductive explanations as bitmasks, in ascending order.
/// `len` receives the number of sets even when `capacity` is too small.
///
/// # Safety
/// `problem` must be a live handle, `buf` valid for `capacity` values and
/// `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_axps(
    problem: *const XpProblem,
    buf: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> XpStatus {
    guard(|| {
        write_masks(
            &enumerate_axps(&deref(problem, "problem")?.problem),
            buf,
            capacity,
            len,
        )
    })
}

/// Contrastive counterpart of [`xp_problem_axps`].
///
/// # Safety
/// Same as [`xp_problem_axps`].
#[no_mangle]
pub unsafe extern "C" fn xp_problem_cxps(
    problem: *const XpProblem,
    buf: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> XpStatus {
    guard(|| {
        write_masks(
            &enumerate_cxps(&deref(problem, "problem")?.problem),
            buf,
            capacity,
            len,
        )
    })
}

/// Bitmask of the features occurring in some abductive explanation.
///
/// # Safety
/// `problem` must be a live handle and `mask` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_relevant(
    problem: *const XpProblem,
    mask: *mut u32,
) -> XpStatus {
    guard(|| {
        let rel = relevancy(&deref(problem, "problem")?.problem)?;
        *out(mask, "mask")? = rel.relevant.bits();
        Ok(())
    })
}

fn shapley_of(p: &mut XpProblem) -> Result<&ShapleyReport, Failure> {
    if p.shapley.is_none() {
        p.shapley = Some(shapley_values(&p.problem)?);
    }
    Ok(p.shapley.as_ref().unwrap())
}

/// Exact Shapley value of `feature` (1-based) as a reduced fraction with a
/// positive denominator. Fails with `Overflow` if either part exceeds 64 bits;
/// [`xp_problem_shapley_string`] has no such limit.
///
/// # Safety
/// `problem` must be a live handle; `numerator` and `denominator` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_shapley(
    problem: *mut XpProblem,
    feature: usize,
    numerator: *mut i64,
    denominator: *mut i64,
) -> XpStatus {
    guard(|| {
        let p = out(problem, "problem")?;
        let m = p.problem.m();
        if feature == 0 || feature > m {
            return Err(Failure(
                XpStatus::Input,
                format!("feature {feature} outside 1..={m}"),
            ));
        }
        let value = shapley_of(p)?.value(feature);
        let overflow = || {
            Failure(
                XpStatus::Overflow,
                format!("Sv({feature}) = {value} exceeds 64 bits"),
            )
        };
        let num = i64::try_from(*value.numer()).map_err(|_| overflow())?;
        let den = i64::try_from(*value.denom()).map_err(|_| overflow())?;
        *out(numerator, "numerator")? = num;
        *out(denominator, "denominator")? = den;
        Ok(())
    })
}

/// Shapley value of `feature` as a NUL-terminated fraction such as `-23/192`.
/// `needed` (may be null) receives the buffer size required.
///
/// # Safety
/// `problem` must be a live handle and `buf` valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_shapley_string(
    problem: *mut XpProblem,
    feature: usize,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> XpStatus {
    guard(|| {
        let p = out(problem, "problem")?;
        let m = p.problem.m();
        if feature == 0 || feature > m {
            return Err(Failure(
                XpStatus::Input,
                format!("feature {feature} outside 1..={m}"),
            ));
        }
        let text = shapley_of(p)?.value(feature).to_string();
        write_string(&text, buf, capacity, needed)
    })
}

/// Issue flags under `registry`: bit `k` set means issue `I(k+1)` holds.
///
/// # Safety
/// `problem` must be a live handle and `flags` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_problem_issues(
    problem: *const XpProblem,
    registry: XpRegistry,
    flags: *mut u8,
) -> XpStatus {
    guard(|| {
        let record = audit_instance(&deref(problem, "problem")?.problem, registry.into())?;
        *out(flags, "flags")? = record.issues.bits();
        Ok(())
    })
}

/// Exhaustive census over all non-constant functions on `m <= 4` features.
///
/// # Safety
/// `counts` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xp_census_exhaustive(
    m: usize,
    registry: XpRegistry,
    workers: usize,
    counts: *mut XpCensusCounts,
) -> XpStatus {
    guard(|| {
        let dst = out(counts, "counts")?;
        let mut config = CensusConfig::new(m, CensusMode::Exhaustive);
        config.registry = registry.into();
        config.workers = workers;
        *dst = XpCensusCounts::from(&run_census(&config)?.counts);
        Ok(())
    })
}
