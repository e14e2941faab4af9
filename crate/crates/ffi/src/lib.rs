//! C ABI for `causalid`.
//!
//! Graphs and models are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`CidStatus`]; on failure the
//! message is available from [`cid_last_error`] on the same thread until the
//! next failing call. Strings handed out by the library are released with
//! [`cid_string_free`]. Variable sets are passed as comma-separated names.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causalid::dsep::d_separated;
use causalid::expr::{evaluate, parse_expr};
use causalid::graph::{parse_graph, to_dsl};
use causalid::identify::{identify, Query, Status};
use causalid::scm::{fmt_rational, parse_model, Assignment, DiscreteModel, Prob, Rational};
use causalid::{CausalGraph, Error, NodeSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    UnknownVariable = 4,
    InvalidQuery = 5,
    Positivity = 6,
    Model = 7,
    /// A size guard or table budget refused the operation.
    Limit = 8,
    Expression = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidIdentifyStatus {
    Identified = 0,
    NotIdentifiedWithinBudget = 1,
    KnownNonIdentifiable = 2,
}

/// A causal graph.
pub struct CidGraph(CausalGraph);

/// A discrete model with exact tables.
pub struct CidModel(DiscreteModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CidStatus {
    match e {
        Error::Parse { .. } | Error::InvalidName(_) | Error::DuplicateVariable(_) => CidStatus::Parse,
        Error::SelfLoop(_) | Error::DuplicateEdge(..) | Error::Cycle(_) => CidStatus::Parse,
        Error::UnknownVariable(_) => CidStatus::UnknownVariable,
        Error::Overlap(_) | Error::InvalidQuery(_) => CidStatus::InvalidQuery,
        Error::Positivity(_) => CidStatus::Positivity,
        Error::Model(_) | Error::Io(_) => CidStatus::Model,
        Error::ScaleGuard { .. } | Error::TableBudget { .. } => CidStatus::Limit,
        Error::Expr(_) => CidStatus::Expression,
        Error::Internal(_) => CidStatus::Internal,
    }
}

struct Fail(CidStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guarded(f: impl FnOnce() -> Result<(), Fail>) -> CidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CidStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside causalid".into());
            CidStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CidStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(CidStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(CidStatus::NullArgument, format!("{what} is null")))
}

fn names(list: &str) -> Vec<&str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

unsafe fn set_of(g: &CausalGraph, p: *const c_char, what: &str) -> Result<NodeSet, Fail> {
    if p.is_null() {
        return Ok(NodeSet::new());
    }
    Ok(g.set(&names(text(p, what)?))?)
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(CidStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cid_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses the graph DSL into a new handle stored in `*out`.
///
/// # Safety
/// `dsl` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_graph_parse(dsl: *const c_char, out: *mut *mut CidGraph) -> CidStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let g = parse_graph(text(dsl, "dsl")?)?;
        *out = Box::into_raw(Box::new(CidGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`cid_graph_parse`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cid_graph_free(g: *mut CidGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of variables, latent ones included; 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn cid_graph_len(g: *const CidGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Canonical DSL text of the graph, freed with [`cid_string_free`].
///
/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_graph_to_dsl(g: *const CidGraph, out: *mut *mut c_char) -> CidStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        *out = owned(to_dsl(&handle(g, "graph")?.0));
        Ok(())
    })
}

/// Whether `given` d-separates `x` from `y`. `given` may be NULL or empty.
///
/// # Safety
/// Strings must be NUL-terminated, `g` live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_d_separated(
    g: *const CidGraph,
    x: *const c_char,
    y: *const c_char,
    given: *const c_char,
    out: *mut bool,
) -> CidStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let g = &handle(g, "graph")?.0;
        let (xs, ys, zs) = (set_of(g, x, "x")?, set_of(g, y, "y")?, set_of(g, given, "given")?);
        *out = d_separated(g, &xs, &ys, &zs)?;
        Ok(())
    })
}

/// Searches for a do-free formula of `p(y|do(x))` within `budget` steps.
/// When identified and `formula` is not NULL, `*formula` receives the text
/// form, freed with [`cid_string_free`]; otherwise it is set to NULL.
///
/// # Safety
/// Strings must be NUL-terminated, `g` live and `status` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_identify(
    g: *const CidGraph,
    x: *const c_char,
    y: *const c_char,
    budget: u32,
    status: *mut CidIdentifyStatus,
    formula: *mut *mut c_char,
) -> CidStatus {
    guarded(|| {
        out_ptr(status, "status")?;
        let g = &handle(g, "graph")?.0;
        let q = Query::new(g.clone(), set_of(g, x, "x")?, set_of(g, y, "y")?)?;
        let r = identify(&q, budget)?;
        *status = match r.status {
            Status::Identified => CidIdentifyStatus::Identified,
            Status::NotIdentifiedWithinBudget(_) => CidIdentifyStatus::NotIdentifiedWithinBudget,
            Status::KnownNonIdentifiable => CidIdentifyStatus::KnownNonIdentifiable,
        };
        if !formula.is_null() {
            *formula = r.formula.map_or(ptr::null_mut(), |f| owned(f.to_string()));
        }
        Ok(())
    })
}

/// Parses the model DSL into a new handle stored in `*out`.
///
/// # Safety
/// `dsl` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_model_parse(dsl: *const c_char, out: *mut *mut CidModel) -> CidStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let m = parse_model(text(dsl, "dsl")?)?;
        *out = Box::into_raw(Box::new(CidModel(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`cid_model_parse`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cid_model_free(m: *mut CidModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates `formula` exactly with its free variables set by `binding`
/// (`"x=1,y=0"`, values as written in the model's domains). `*value`
/// receives the nearest double; when `exact` is not NULL, `*exact` receives
/// the rational as text, freed with [`cid_string_free`].
///
/// # Safety
/// Strings must be NUL-terminated, `m` live and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn cid_eval(
    m: *const CidModel,
    formula: *const c_char,
    binding: *const c_char,
    value: *mut f64,
    exact: *mut *mut c_char,
) -> CidStatus {
    guarded(|| {
        out_ptr(value, "value")?;
        let m = &handle(m, "model")?.0;
        let e = parse_expr(text(formula, "formula")?)?;
        let mut assignment: Assignment = Vec::new();
        if !binding.is_null() {
            for pair in names(text(binding, "binding")?) {
                let (n, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Fail(CidStatus::InvalidQuery, format!("binding `{pair}` is not name=value")))?;
                assignment.push((n.trim().to_string(), m.value_index(n.trim(), v.trim())?));
            }
        }
        let r: Rational = evaluate(&e, m, &assignment)?;
        *value = r.to_f64();
        if !exact.is_null() {
            *exact = owned(fmt_rational(&r));
        }
        Ok(())
    })
}
