//! C ABI for the NRP solvers.
//!
//! Handles are opaque and owned by the caller: every `*_new`/`*_load`/solve
//! function hands back a pointer that must be released with the matching
//! `*_free`. Functions return an [`NrpStatus`]; on failure
//! [`nrp_last_error_message`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nrp_core::eda::{self, EdaConfig, InitMethod, Sampler};
use nrp_core::exact::{self, ExactSolver};
use nrp_core::instance_file::{front_csv, InstanceFile};
use nrp_core::metrics::{coincident_solutions, hypervolume, Front};
use nrp_core::{AncestralOrdering, Error, InteractionGraph, NrpInstance, TieBreak};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NrpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    OutOfRange = 3,
    Validation = 10,
    Contradiction = 11,
    Cycle = 12,
    SizeGuard = 13,
    Partition = 14,
    Resource = 15,
    Domain = 16,
    Parse = 17,
    Config = 18,
    Io = 19,
    Panic = 99,
}

impl From<&Error> for NrpStatus {
    fn from(e: &Error) -> Self {
        match e.category() {
            "validation" => NrpStatus::Validation,
            "contradiction" => NrpStatus::Contradiction,
            "cycle" => NrpStatus::Cycle,
            "size_guard" => NrpStatus::SizeGuard,
            "partition" => NrpStatus::Partition,
            "resource" => NrpStatus::Resource,
            "domain" => NrpStatus::Domain,
            "parse" => NrpStatus::Parse,
            "config" => NrpStatus::Config,
            _ => NrpStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NrpExactSolver {
    BruteForce = 0,
    BranchAndBound = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NrpInit {
    Random = 0,
    Pls = 1,
    Maxprob = 2,
}

/// EDA settings. Fill with [`nrp_eda_options_default`] before changing fields.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NrpEdaOptions {
    pub population_size: usize,
    pub max_iterations: usize,
    pub stall_iterations: usize,
    pub sample_size: usize,
    pub init: NrpInit,
    /// Non-zero selects maximum-probability sampling instead of PLS.
    pub maxprob_sampler: u8,
    pub m_equivalent_size: f64,
    pub prior_p: f64,
    pub seed: u64,
}

/// A validated instance with its transformed graph and ancestral ordering.
pub struct NrpProblem {
    instance: NrpInstance,
    graph: InteractionGraph,
    ordering: AncestralOrdering,
}

/// A Pareto front together with the instance it belongs to.
pub struct NrpFront {
    instance: NrpInstance,
    front: Front,
}

struct Failure(NrpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(NrpStatus::from(&e), format!("error[{}]: {e}", e.category()))
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NrpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NrpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NrpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NrpStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NrpStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn output<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn problem_from(instance: NrpInstance) -> Result<Box<NrpProblem>, Failure> {
    let graph = InteractionGraph::build(&instance)?;
    let ordering = graph.ancestral_ordering(TieBreak::LowestId)?;
    Ok(Box::new(NrpProblem {
        instance,
        graph,
        ordering,
    }))
}

/// Parses an instance JSON document with the effort limit at `ratio` of the
/// total effort.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_problem_from_json(json: *const c_char, ratio: f64, out: *mut *mut NrpProblem) -> NrpStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let file = InstanceFile::from_json(text(json, "json")?)?;
        *out = Box::into_raw(problem_from(file.instance(ratio)?)?);
        Ok(())
    })
}

/// Same as [`nrp_problem_from_json`] reading the document from `path`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_problem_load(path: *const c_char, ratio: f64, out: *mut *mut NrpProblem) -> NrpStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let file = InstanceFile::load(text(path, "path")?)?;
        *out = Box::into_raw(problem_from(file.instance(ratio)?)?);
        Ok(())
    })
}

/// # Safety
/// `problem` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_problem_free(problem: *mut NrpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of requirements, or 0 for a null handle.
///
/// # Safety
/// `problem` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_problem_requirement_count(problem: *const NrpProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.instance.len())
}

/// Effort limit, or NaN for a null handle.
///
/// # Safety
/// `problem` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_problem_effort_limit(problem: *const NrpProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |p| p.instance.effort_limit)
}

/// Exact Pareto front.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_solve_exact(problem: *const NrpProblem, solver: NrpExactSolver, out: *mut *mut NrpFront) -> NrpStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let p = reference(problem, "problem")?;
        let solver = match solver {
            NrpExactSolver::BruteForce => ExactSolver::Brute,
            NrpExactSolver::BranchAndBound => ExactSolver::Bnb,
        };
        let front = exact::solve_exact(&p.instance, &p.graph, solver)?;
        *out = Box::into_raw(Box::new(NrpFront {
            instance: p.instance.clone(),
            front,
        }));
        Ok(())
    })
}

/// Writes the default EDA settings for `problem` into `out`.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_eda_options_default(problem: *const NrpProblem, out: *mut NrpEdaOptions) -> NrpStatus {
    guard(|| {
        let p = reference(problem, "problem")?;
        let c = EdaConfig::for_size(p.instance.len());
        *output(out, "out")? = NrpEdaOptions {
            population_size: c.population_size,
            max_iterations: c.max_iterations,
            stall_iterations: c.stall_iterations,
            sample_size: c.sample_size,
            init: NrpInit::Pls,
            maxprob_sampler: 0,
            m_equivalent_size: c.m_equivalent_size,
            prior_p: c.prior_p,
            seed: c.seed,
        };
        Ok(())
    })
}

/// Runs the EDA once. A null `options` uses the defaults.
///
/// # Safety
/// `problem` must be a live handle, `options` null or readable, and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_solve_eda(
    problem: *const NrpProblem,
    options: *const NrpEdaOptions,
    out: *mut *mut NrpFront,
) -> NrpStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let p = reference(problem, "problem")?;
        let mut config = EdaConfig::for_size(p.instance.len());
        if let Some(o) = options.as_ref() {
            config.population_size = o.population_size;
            config.max_iterations = o.max_iterations;
            config.stall_iterations = o.stall_iterations;
            config.sample_size = o.sample_size;
            config.init = match o.init {
                NrpInit::Random => InitMethod::Random,
                NrpInit::Pls => InitMethod::Pls,
                NrpInit::Maxprob => InitMethod::Maxprob,
            };
            config.sampler = if o.maxprob_sampler != 0 { Sampler::Maxprob } else { Sampler::Pls };
            config.m_equivalent_size = o.m_equivalent_size;
            config.prior_p = o.prior_p;
            config.seed = o.seed;
        }
        let (front, _) = eda::run(&p.instance, &p.graph, &p.ordering, &config)?;
        *out = Box::into_raw(Box::new(NrpFront {
            instance: p.instance.clone(),
            front,
        }));
        Ok(())
    })
}

/// # Safety
/// `front` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_free(front: *mut NrpFront) {
    if !front.is_null() {
        drop(Box::from_raw(front));
    }
}

/// Number of solutions, or 0 for a null handle.
///
/// # Safety
/// `front` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_len(front: *const NrpFront) -> usize {
    front.as_ref().map_or(0, |f| f.front.len())
}

/// Objective values of solution `index`, in ascending effort order.
///
/// # Safety
/// `front` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_point(
    front: *const NrpFront,
    index: usize,
    satisfaction: *mut f64,
    effort: *mut f64,
) -> NrpStatus {
    guard(|| {
        let f = reference(front, "front")?;
        let s = f.front.solutions().get(index).ok_or_else(|| {
            Failure(NrpStatus::OutOfRange, format!("index {index} out of range for {} solutions", f.front.len()))
        })?;
        *output(satisfaction, "satisfaction")? = s.satisfaction();
        *output(effort, "effort")? = s.effort();
        Ok(())
    })
}

/// Hypervolume against the nadir point `(effort limit, 0)`.
///
/// # Safety
/// `front` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_hypervolume(front: *const NrpFront, out: *mut f64) -> NrpStatus {
    guard(|| {
        let f = reference(front, "front")?;
        *output(out, "out")? = hypervolume(&f.front, f.instance.effort_limit)?;
        Ok(())
    })
}

/// Number of objective points of `front` also present on `reference`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_coincident(front: *const NrpFront, reference_front: *const NrpFront, out: *mut usize) -> NrpStatus {
    guard(|| {
        let f = reference(front, "front")?;
        let r = reference(reference_front, "reference_front")?;
        *output(out, "out")? = coincident_solutions(&f.front, &r.front);
        Ok(())
    })
}

/// The front as CSV text; release it with [`nrp_string_free`].
///
/// # Safety
/// `front` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nrp_front_to_csv(front: *const NrpFront, out: *mut *mut c_char) -> NrpStatus {
    guard(|| {
        let out = output(out, "out")?;
        *out = ptr::null_mut();
        let f = reference(front, "front")?;
        let bytes = front_csv(&f.front, &f.instance)?;
        let s = CString::new(bytes).map_err(|_| Failure(NrpStatus::Io, "csv contains a nul byte".into()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn nrp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nrp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn nrp_status_name(status: NrpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        NrpStatus::Ok => c"ok",
        NrpStatus::NullArgument => c"null_argument",
        NrpStatus::InvalidUtf8 => c"invalid_utf8",
        NrpStatus::OutOfRange => c"out_of_range",
        NrpStatus::Validation => c"validation",
        NrpStatus::Contradiction => c"contradiction",
        NrpStatus::Cycle => c"cycle",
        NrpStatus::SizeGuard => c"size_guard",
        NrpStatus::Partition => c"partition",
        NrpStatus::Resource => c"resource",
        NrpStatus::Domain => c"domain",
        NrpStatus::Parse => c"parse",
        NrpStatus::Config => c"config",
        NrpStatus::Io => c"io",
        NrpStatus::Panic => c"panic",
    };
    s.as_ptr()
}
