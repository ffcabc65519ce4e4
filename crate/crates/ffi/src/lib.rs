//! C interface to kmsgraph.
//!
//! Every fallible function returns a [`KmsStatus`]. On failure the message is kept per thread
//! and can be read with [`kms_last_error`]. Strings returned by the library must be released
//! with [`kms_string_free`], graph handles with [`kms_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kmsgraph::report::{parse_beta, AnalysisReport};
use kmsgraph::states::{c_series_with, SERIES_TOLERANCE};
use kmsgraph::{parse_graph, Algebra, Error, GraphAnalysis, Trace};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque analysed graph.
pub struct KmsGraph {
    analysis: GraphAnalysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> KmsStatus {
    match err {
        Error::Parse(_) => KmsStatus::Parse,
        Error::NonConvergence { .. } | Error::Inconsistent { .. } => KmsStatus::Numerical,
        _ => KmsStatus::InvalidArgument,
    }
}

struct Failure(KmsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null() -> Failure {
    Failure(KmsStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KmsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KmsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KmsStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(KmsStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a>(g: *const KmsGraph) -> Result<&'a KmsGraph, Failure> {
    g.as_ref().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Parses a graph description (JSON text) and analyses it.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_graph` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_from_json(json: *const c_char, out_graph: *mut *mut KmsGraph) -> KmsStatus {
    guard(|| {
        let slot = out(out_graph)?;
        *slot = ptr::null_mut();
        let graph = parse_graph(text(json)?).map_err(Error::from)?;
        let analysis = GraphAnalysis::new(graph)?;
        *slot = Box::into_raw(Box::new(KmsGraph { analysis }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `g` must come from [`kms_graph_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_free(g: *mut KmsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_vertex_count(g: *const KmsGraph, out_count: *mut usize) -> KmsStatus {
    guard(|| {
        *out(out_count)? = handle(g)?.analysis.graph().vertex_count();
        Ok(())
    })
}

/// # Safety
/// `g` must be a live handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_edge_count(g: *const KmsGraph, out_count: *mut usize) -> KmsStatus {
    guard(|| {
        *out(out_count)? = handle(g)?.analysis.graph().edge_count();
        Ok(())
    })
}

/// Smallest and largest vertex entropies (`h_X` and `h_X^s`).
///
/// # Safety
/// `g` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_entropy(g: *const KmsGraph, h_min: *mut f64, h_strong: *mut f64) -> KmsStatus {
    guard(|| {
        let a = &handle(g)?.analysis;
        let (lo, hi) = (out(h_min)?, out(h_strong)?);
        *lo = a.entropy_hx();
        *hi = a.strong_entropy();
        Ok(())
    })
}

/// Writes the transition β values, including any boundary entry at zero, in increasing order.
///
/// `out_count` always receives the number of transitions. Pass a null buffer to query it;
/// a buffer shorter than that yields `BufferTooSmall`.
///
/// # Safety
/// `g` must be a live handle; `buf` must hold `len` doubles unless null.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_transitions(
    g: *const KmsGraph,
    buf: *mut f64,
    len: usize,
    out_count: *mut usize,
) -> KmsStatus {
    guard(|| {
        let betas: Vec<f64> = handle(g)?.analysis.phase_diagram().transitions.iter().map(|t| t.beta).collect();
        *out(out_count)? = betas.len();
        if buf.is_null() {
            return Ok(());
        }
        if len < betas.len() {
            return Err(Failure(
                KmsStatus::BufferTooSmall,
                format!("need {} entries, got {len}", betas.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, betas.len()).copy_from_slice(&betas);
        Ok(())
    })
}

/// Normalising constant `c_{τ,β}`. Writes infinity when the series diverges.
///
/// # Safety
/// `g` must be a live handle; `weights` must hold `len` doubles, one per vertex.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_c_series(
    g: *const KmsGraph,
    weights: *const f64,
    len: usize,
    beta: f64,
    out_value: *mut f64,
) -> KmsStatus {
    guard(|| {
        let a = &handle(g)?.analysis;
        let w = slice(weights, len)?;
        if w.len() != a.graph().vertex_count() {
            return Err(Failure(
                KmsStatus::InvalidArgument,
                format!("expected {} weights, got {}", a.graph().vertex_count(), w.len()),
            ));
        }
        let slot = out(out_value)?;
        let tau = Trace::new(w.to_vec())?;
        *slot = c_series_with(a, &tau, beta, SERIES_TOLERANCE)?.value;
        Ok(())
    })
}

/// Full analysis report as JSON: entropies, phase diagram and, for each β, the simplices of
/// all three algebras. Free the result with [`kms_string_free`].
///
/// # Safety
/// `g` must be a live handle; `betas` must hold `len` doubles; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kms_graph_analyze_json(
    g: *const KmsGraph,
    betas: *const f64,
    len: usize,
    out_json: *mut *mut c_char,
) -> KmsStatus {
    guard(|| {
        let slot = out(out_json)?;
        *slot = ptr::null_mut();
        let a = &handle(g)?.analysis;
        let b = slice(betas, len)?;
        let report = AnalysisReport::build(a.graph().clone(), b, &Algebra::ALL)?;
        let body = serde_json::to_string_pretty(&report.to_json()?)
            .map_err(|e| Failure(KmsStatus::InvalidArgument, e.to_string()))?;
        *slot = c_string(body);
        Ok(())
    })
}

/// Parses `"1.5"` or `"log:3"` style β text.
///
/// # Safety
/// `s` must be a NUL-terminated string and `out_beta` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kms_parse_beta(s: *const c_char, out_beta: *mut f64) -> KmsStatus {
    guard(|| {
        let slot = out(out_beta)?;
        *slot = parse_beta(text(s)?).map_err(Error::from)?;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null.
/// The pointer stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn kms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
