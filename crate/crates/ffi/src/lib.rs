//! C ABI over the kdgraph engine.
//!
//! A `KdgSession` holds a fact store and, after `kdg_analyze`, the completed
//! analysis. Every call returns a `KdgStatus`; on failure the session keeps a
//! message readable through `kdg_last_error_message`. Strings returned
//! through `out` parameters are owned by the caller and released with
//! `kdg_string_free`. Input strings are UTF-8 and NUL-terminated.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kdgraph::pipeline::{self, Analysis};
use kdgraph::query::{self, DEFAULT_ORDERING_CAP};
use kdgraph::resolution::Confidence;
use kdgraph::store::{parse_into, render_facts};
use kdgraph::{Error, KnowledgeStore};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument value was not recognized (pattern, confidence level).
    InvalidArgument = 3,
    /// The fact text did not parse.
    Parse = 4,
    /// A superclass, structural or subevent cycle.
    Cycle = 5,
    /// A named node is not in the graph.
    UnknownNode = 6,
    /// The input was rejected for another reason.
    Rejected = 7,
    /// The call needs `kdg_analyze` to have succeeded first.
    NotAnalyzed = 8,
    /// The engine panicked; the session should be freed.
    Panic = 9,
}

/// Opaque session handle.
pub struct KdgSession {
    store: KnowledgeStore,
    analysis: Option<Analysis>,
    last_error: Option<CString>,
}

struct Failure {
    status: KdgStatus,
    message: String,
}

impl Failure {
    fn new(status: KdgStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => KdgStatus::Parse,
            Error::HierarchyCycle(_) | Error::KdgCycle(_) | Error::SubeventCycle(_) => KdgStatus::Cycle,
            Error::UnknownNode(_) => KdgStatus::UnknownNode,
            _ => KdgStatus::Rejected,
        };
        Failure::new(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_owned())
}

/// Runs `f` on the session, recording the error message on failure.
fn with_session(session: *mut KdgSession, f: impl FnOnce(&mut KdgSession) -> Outcome) -> KdgStatus {
    // SAFETY: the caller passes a pointer from `kdg_session_new` or null.
    let Some(s) = (unsafe { session.as_mut() }) else {
        return KdgStatus::NullArgument;
    };
    let result = catch_unwind(AssertUnwindSafe(|| f(s)))
        .unwrap_or_else(|p| Err(Failure::new(KdgStatus::Panic, panic_message(p.as_ref()))));
    match result {
        Ok(()) => {
            s.last_error = None;
            KdgStatus::Ok
        }
        Err(failure) => {
            let message = failure.message.replace('\0', " ");
            s.last_error = CString::new(message).ok();
            failure.status
        }
    }
}

/// Reads an optional string argument; null is `None`.
fn opt_str<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    // SAFETY: non-null input strings are NUL-terminated per the contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map(Some)
        .map_err(|_| Failure::new(KdgStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn req_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    opt_str(p, name)?.ok_or_else(|| Failure::new(KdgStatus::NullArgument, format!("{name} is null")))
}

fn write_out(out: *mut *mut c_char, text: String) -> Outcome {
    if out.is_null() {
        return Err(Failure::new(KdgStatus::NullArgument, "out is null"));
    }
    let c = CString::new(text).map_err(|_| Failure::new(KdgStatus::Rejected, "output contains NUL"))?;
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn json_text(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values serialize")
}

fn analysis(s: &KdgSession) -> Result<&Analysis, Failure> {
    s.analysis
        .as_ref()
        .ok_or_else(|| Failure::new(KdgStatus::NotAnalyzed, "call kdg_analyze first"))
}

fn confidence(p: *const c_char) -> Result<Option<Confidence>, Failure> {
    opt_str(p, "min_confidence")?
        .map(|c| {
            c.parse()
                .map_err(|_| Failure::new(KdgStatus::InvalidArgument, format!("unknown confidence level {c}")))
        })
        .transpose()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kdg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an empty session. Free it with `kdg_session_free`.
#[no_mangle]
pub extern "C" fn kdg_session_new() -> *mut KdgSession {
    Box::into_raw(Box::new(KdgSession {
        store: KnowledgeStore::new(),
        analysis: None,
        last_error: None,
    }))
}

/// Frees a session. Null is ignored.
///
/// # Safety
/// `session` must come from `kdg_session_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kdg_session_free(session: *mut KdgSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Parses `text` as facts and adds them to the session's store. `origin`
/// names the source in parse errors and may be null. Discards any previous
/// analysis. On a parse error the store is unchanged.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_load_facts(
    session: *mut KdgSession,
    text: *const c_char,
    origin: *const c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let text = req_str(text, "text")?;
        let origin = opt_str(origin, "origin")?.unwrap_or("<input>");
        let mut next = s.store.clone();
        parse_into(&mut next, text, origin).map_err(Error::from)?;
        s.store = next;
        s.analysis = None;
        Ok(())
    })
}

/// Number of facts in the store, or in the completed store after a
/// successful `kdg_analyze`. Returns 0 for a null session.
///
/// # Safety
/// `session` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn kdg_fact_count(session: *const KdgSession) -> usize {
    match unsafe { session.as_ref() } {
        Some(s) => s.analysis.as_ref().map_or(s.store.len(), |a| a.store.len()),
        None => 0,
    }
}

/// Runs every derivation stage, restricted to the graph rooted at `root`
/// when it is non-null.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_analyze(session: *mut KdgSession, root: *const c_char) -> KdgStatus {
    with_session(session, |s| {
        s.analysis = None;
        let root = opt_str(root, "root")?;
        s.analysis = Some(pipeline::analyze(&s.store, root)?);
        Ok(())
    })
}

/// Writes the derived facts (or all facts when `include_asserted`) in fact
/// file syntax to `*out`.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_derived_facts(
    session: *mut KdgSession,
    include_asserted: bool,
    out: *mut *mut c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let a = analysis(s)?;
        let facts: Vec<_> = if include_asserted {
            a.store.iter().collect()
        } else {
            a.store.derived().collect()
        };
        write_out(out, render_facts(facts))
    })
}

/// Writes the instance and spatial matches as JSON to `*out`.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_matches_json(session: *mut KdgSession, out: *mut *mut c_char) -> KdgStatus {
    with_session(session, |s| {
        let a = analysis(s)?;
        let matches = a.matches();
        let (spatial, _) = a.spatial(&matches);
        write_out(
            out,
            json_text(&serde_json::json!({
                "match_with": matches.report(),
                "spatially_match": spatial.report(),
            })),
        )
    })
}

/// Writes joins, possible next events, chains and super-events as JSON to
/// `*out`. `min_confidence` (`low`, `medium`, `high` or null) drops weaker
/// joins.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_link_json(
    session: *mut KdgSession,
    min_confidence: *const c_char,
    out: *mut *mut c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let threshold = confidence(min_confidence)?;
        let report = analysis(s)?.link(threshold)?;
        write_out(out, json_text(&report.to_json()))
    })
}

/// Writes the super-event facts of the link step in fact file syntax to
/// `*out`.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_link_patch(
    session: *mut KdgSession,
    min_confidence: *const c_char,
    out: *mut *mut c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let threshold = confidence(min_confidence)?;
        let report = analysis(s)?.link(threshold)?;
        write_out(out, report.patch().to_fact_file())
    })
}

/// Compares the engine with the rule program on the session's store and
/// writes the report as JSON to `*out`. A difference is reported through
/// the `passes` field, not the status.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_check_json(
    session: *mut KdgSession,
    root: *const c_char,
    out: *mut *mut c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let root = opt_str(root, "root")?;
        let report = kdgraph::oracle::differential_check(&s.store, root)?;
        write_out(out, json_text(&report.to_json()))
    })
}

/// Extracts the answer structure of `pattern` (`how-occurs`,
/// `how-produces`, `how-related` or `why-important`) and writes it as JSON
/// to `*out`. `y` is ignored by `how-occurs` and required by the others.
/// `cap` is the maximum number of edges in an ordering path; 0 means the
/// default.
///
/// # Safety
/// Pointers must be null or valid per the module contract.
#[no_mangle]
pub unsafe extern "C" fn kdg_query_json(
    session: *mut KdgSession,
    pattern: *const c_char,
    x: *const c_char,
    y: *const c_char,
    cap: usize,
    out: *mut *mut c_char,
) -> KdgStatus {
    with_session(session, |s| {
        let pattern = req_str(pattern, "pattern")?;
        let x = req_str(x, "x")?;
        let y = opt_str(y, "y")?;
        let cap = if cap == 0 { DEFAULT_ORDERING_CAP } else { cap };
        let a = analysis(s)?;
        let need_y = || y.ok_or_else(|| Failure::new(KdgStatus::NullArgument, format!("{pattern} needs y")));
        let answer = match pattern {
            "how-occurs" => query::how_occurs(&a.kdg, x)?,
            "how-produces" => query::how_produces(&a.kdg, &a.store, &a.matches(), x, need_y()?)?,
            "how-related" => query::how_related(&a.kdg, x, need_y()?, cap)?,
            "why-important" => query::why_important(&a.kdg, &a.store, x, need_y()?, cap)?,
            other => {
                return Err(Failure::new(
                    KdgStatus::InvalidArgument,
                    format!("unknown pattern {other}"),
                ))
            }
        };
        write_out(out, json_text(&answer.to_json()))
    })
}

/// Message of the last failed call on this session, or null when the last
/// call succeeded. Valid until the next call on the session.
///
/// # Safety
/// `session` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn kdg_last_error_message(session: *const KdgSession) -> *const c_char {
    match unsafe { session.as_ref() } {
        Some(s) => s.last_error.as_ref().map_or(ptr::null(), |m| m.as_ptr()),
        None => ptr::null(),
    }
}

/// Frees a string returned through an `out` parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kdg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
