//! C ABI over the `reqgossip` simulator.
//!
//! Graphs and simulations are opaque handles created by `rg_*_new` calls and
//! released with the matching `rg_*_free`. Every fallible call returns an
//! [`RgStatus`]; on failure [`rg_last_error_message`] describes the problem.
//! Strings handed out by the library must be released with
//! [`rg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reqgossip::analysis::{complete_value, verify_bound, Claim};
use reqgossip::engine::{Protocol, QueueInit, SimState, StopReason};
use reqgossip::graph::{generate, Graph, GraphKind};
use reqgossip::value::{format_rational, from_int, parse_rational, to_f64, Rational};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    InvalidUtf8 = 4,
    /// The library panicked; the handle involved should be freed.
    Internal = 5,
}

/// Why `rg_sim_run` stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgStopReason {
    Consensus = 0,
    Ratio = 1,
    Budget = 2,
}

/// Opaque allowable graph.
pub struct RgGraph(Graph);

/// Opaque simulation state with its trace.
pub struct RgSim(SimState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn fail(status: RgStatus, msg: impl Into<String>) -> RgStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> RgStatus) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(RgStatus::Internal, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, RgStatus> {
    if p.is_null() {
        return Err(fail(RgStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RgStatus::InvalidUtf8, "string is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("library strings have no nul bytes").into_raw()
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(RgStatus::NullPointer, concat!("null ", stringify!($p))),
        }
    };
}

macro_rules! deref_mut {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(RgStatus::NullPointer, concat!("null ", stringify!($p))),
        }
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn rg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a connected graph on labels `1..=n` from `edge_count` pairs stored
/// flat in `edges` (`2 * edge_count` labels).
///
/// # Safety
/// `edges` must point to `2 * edge_count` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_new(n: usize, edges: *const usize, edge_count: usize, out: *mut *mut RgGraph) -> RgStatus {
    guard(|| {
        let out = deref_mut!(out);
        if edges.is_null() && edge_count > 0 {
            return fail(RgStatus::NullPointer, "null edges");
        }
        let flat = if edge_count == 0 { &[][..] } else { std::slice::from_raw_parts(edges, 2 * edge_count) };
        match Graph::allowable(n, flat.chunks(2).map(|p| (p[0], p[1]))) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(RgGraph(g)));
                RgStatus::Ok
            }
            Err(e) => fail(RgStatus::InvalidGraph, e.to_string()),
        }
    })
}

/// Generates a graph from `KIND,n[,p]` (for example `"random-connected,8,0.4"`).
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_generate(spec: *const c_char, seed: u64, out: *mut *mut RgGraph) -> RgStatus {
    guard(|| {
        let out = deref_mut!(out);
        let spec = try_status!(read_str(spec));
        let g = GraphKind::parse_cli(spec, seed).and_then(|k| generate(&k));
        match g {
            Ok(g) => {
                *out = Box::into_raw(Box::new(RgGraph(g)));
                RgStatus::Ok
            }
            Err(e) => fail(RgStatus::InvalidGraph, e.to_string()),
        }
    })
}

/// # Safety
/// `g` must come from `rg_graph_new`/`rg_graph_generate` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_free(g: *mut RgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_vertex_count(g: *const RgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_edge_count(g: *const RgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Graph as `{"n": .., "edges": [[u, v], ..]}`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_graph_json(g: *const RgGraph, out: *mut *mut c_char) -> RgStatus {
    guard(|| {
        let g = deref!(g);
        let out = deref_mut!(out);
        *out = into_c_string(serde_json::to_string(&g.0).expect("graphs serialize"));
        RgStatus::Ok
    })
}

fn protocol_of(p: u8) -> Result<Protocol, RgStatus> {
    match p {
        1 => Ok(Protocol::I),
        2 => Ok(Protocol::II),
        3 => Ok(Protocol::III),
        _ => Err(fail(RgStatus::InvalidArgument, format!("protocol {p} is not 1, 2 or 3"))),
    }
}

fn queue_init(queue_seed: i64) -> QueueInit {
    if queue_seed < 0 {
        QueueInit::Sorted
    } else {
        QueueInit::Seeded(queue_seed as u64)
    }
}

fn make_sim(g: &RgGraph, protocol: u8, x0: Vec<Rational>, queue_seed: i64, out: &mut *mut RgSim) -> RgStatus {
    let protocol = try_status!(protocol_of(protocol));
    match SimState::new(g.0.clone(), protocol, x0, &queue_init(queue_seed)) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(RgSim(s)));
            RgStatus::Ok
        }
        Err(e) => fail(RgStatus::InvalidArgument, e.to_string()),
    }
}

/// Starts a simulation with integer initial values (`n` of them). The graph
/// is copied. `queue_seed < 0` selects ascending queues, otherwise queues are
/// shuffled with that seed.
///
/// # Safety
/// `g` must be live, `values` must hold `n` readable values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_new(
    g: *const RgGraph,
    protocol: u8,
    values: *const i64,
    n: usize,
    queue_seed: i64,
    out: *mut *mut RgSim,
) -> RgStatus {
    guard(|| {
        let g = deref!(g);
        let out = deref_mut!(out);
        if values.is_null() {
            return fail(RgStatus::NullPointer, "null values");
        }
        let x0 = std::slice::from_raw_parts(values, n).iter().map(|&v| from_int(v)).collect();
        make_sim(g, protocol, x0, queue_seed, out)
    })
}

/// As [`rg_sim_new`] with values given as `"num/den"` or integer strings.
///
/// # Safety
/// `values` must hold `n` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_new_rational(
    g: *const RgGraph,
    protocol: u8,
    values: *const *const c_char,
    n: usize,
    queue_seed: i64,
    out: *mut *mut RgSim,
) -> RgStatus {
    guard(|| {
        let g = deref!(g);
        let out = deref_mut!(out);
        if values.is_null() {
            return fail(RgStatus::NullPointer, "null values");
        }
        let mut x0 = Vec::with_capacity(n);
        for &p in std::slice::from_raw_parts(values, n) {
            let s = try_status!(read_str(p));
            match parse_rational(s) {
                Ok(v) => x0.push(v),
                Err(e) => return fail(RgStatus::InvalidArgument, e.to_string()),
            }
        }
        make_sim(g, protocol, x0, queue_seed, out)
    })
}

/// # Safety
/// `s` must come from `rg_sim_new*` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_free(s: *mut RgSim) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Executes one iteration; `gossips` (nullable) receives its gossip count.
///
/// # Safety
/// `s` must be live; `gossips` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_step(s: *mut RgSim, gossips: *mut usize) -> RgStatus {
    guard(|| {
        let s = deref_mut!(s);
        let count = s.0.step().gossips.len();
        if let Some(g) = gossips.as_mut() {
            *g = count;
        }
        RgStatus::Ok
    })
}

/// Runs up to `max_iters` iterations, stopping early at consensus or once the
/// complete-graph indicator drops below `stop_ratio` (`"P/Q"`, nullable)
/// times its initial value.
///
/// # Safety
/// `s` must be live; `stop_ratio` null or a nul-terminated string; `reason` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_run(
    s: *mut RgSim,
    max_iters: usize,
    stop_ratio: *const c_char,
    reason: *mut RgStopReason,
) -> RgStatus {
    guard(|| {
        let s = deref_mut!(s);
        let ratio = if stop_ratio.is_null() {
            None
        } else {
            match parse_rational(try_status!(read_str(stop_ratio))) {
                Ok(r) => Some(r),
                Err(e) => return fail(RgStatus::InvalidArgument, e.to_string()),
            }
        };
        let r = match s.0.run(max_iters, ratio.as_ref()) {
            StopReason::Consensus => RgStopReason::Consensus,
            StopReason::Ratio => RgStopReason::Ratio,
            StopReason::Budget => RgStopReason::Budget,
        };
        if let Some(out) = reason.as_mut() {
            *out = r;
        }
        RgStatus::Ok
    })
}

/// Iterations executed so far, or 0 for a null handle.
///
/// # Safety
/// `s` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_iterations(s: *const RgSim) -> usize {
    s.as_ref().map_or(0, |s| s.0.t())
}

/// Writes the current values as floats into `buf` (`len` must equal `n`).
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_values(s: *const RgSim, buf: *mut f64, len: usize) -> RgStatus {
    guard(|| {
        let s = deref!(s);
        if buf.is_null() {
            return fail(RgStatus::NullPointer, "null buffer");
        }
        let x = s.0.x();
        if len != x.len() {
            return fail(RgStatus::InvalidArgument, format!("buffer holds {len} values, graph has {}", x.len()));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (o, v) in out.iter_mut().zip(&x) {
            *o = to_f64(v);
        }
        RgStatus::Ok
    })
}

/// Exact current value of `agent` (1-based) as `"num/den"`.
///
/// # Safety
/// `s` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_value_string(s: *const RgSim, agent: usize, out: *mut *mut c_char) -> RgStatus {
    guard(|| {
        let s = deref!(s);
        let out = deref_mut!(out);
        let n = s.0.graph().n();
        if agent == 0 || agent > n {
            return fail(RgStatus::InvalidArgument, format!("agent {agent} outside 1..={n}"));
        }
        *out = into_c_string(format_rational(&s.0.agent(agent).x));
        RgStatus::Ok
    })
}

/// Complete-graph indicator `Σ_{i<j} |x_i - x_j|` of the current values, as
/// a float and (nullable `exact`) as `"num/den"`.
///
/// # Safety
/// `s` must be live; `value` writable; `exact` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_indicator(s: *const RgSim, value: *mut f64, exact: *mut *mut c_char) -> RgStatus {
    guard(|| {
        let s = deref!(s);
        let value = deref_mut!(value);
        let v = complete_value(&s.0.x());
        *value = to_f64(&v);
        if let Some(e) = exact.as_mut() {
            *e = into_c_string(format_rational(&v));
        }
        RgStatus::Ok
    })
}

/// The trace so far, one JSON record per line.
///
/// # Safety
/// `s` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_trace_jsonl(s: *const RgSim, out: *mut *mut c_char) -> RgStatus {
    guard(|| {
        let s = deref!(s);
        let out = deref_mut!(out);
        let mut buf = Vec::new();
        s.0.trace().write_jsonl(&mut buf).expect("writing to memory");
        *out = into_c_string(String::from_utf8(buf).expect("JSON is UTF-8"));
        RgStatus::Ok
    })
}

/// Checks a named claim (for example `"lemma_pizza"`) on the trace so far.
/// `pass` receives the verdict; `report` (nullable) the JSON report.
///
/// # Safety
/// `s` must be live; `claim` nul-terminated; `pass` writable; `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rg_sim_verify(
    s: *const RgSim,
    claim: *const c_char,
    pass: *mut bool,
    report: *mut *mut c_char,
) -> RgStatus {
    guard(|| {
        let s = deref!(s);
        let pass = deref_mut!(pass);
        let name = try_status!(read_str(claim));
        let claim: Claim = match name.parse() {
            Ok(c) => c,
            Err(e) => return fail(RgStatus::InvalidArgument, format!("{e}")),
        };
        match verify_bound(s.0.trace(), claim) {
            Ok(r) => {
                *pass = r.pass;
                if let Some(out) = report.as_mut() {
                    *out = into_c_string(serde_json::to_string(&r).expect("reports serialize"));
                }
                RgStatus::Ok
            }
            Err(e) => fail(RgStatus::InvalidArgument, e.to_string()),
        }
    })
}
