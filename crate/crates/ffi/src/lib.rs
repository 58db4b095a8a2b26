//! C ABI over `accel-consensus`.
//!
//! Every function returns an [`AcStatus`]. Objects cross the boundary as
//! opaque handles created by `ac_*_new`/constructor calls and released by
//! the matching `*_free`. After a failing call, `ac_last_error_message`
//! describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use accel_consensus::consensus::{
    consensus_step, run_consensus, ConsensusState, MomentumParams, StopNorm,
};
use accel_consensus::graphs::{
    complete_graph, geometric_random_graph, grid_2d, lazy_metropolis, line_graph, lollipop_graph,
    random_connected_graph, spectral_report, star_graph, Graph, NeighborWeights,
};
use accel_consensus::optimize::{run_optimize, ObjectiveSet};
use accel_consensus::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSize = 2,
    InvalidParameter = 3,
    Disconnected = 4,
    ShapeMismatch = 5,
    Failed = 6,
    Panic = 7,
}

/// An undirected connected or disconnected graph.
pub struct AcGraph {
    graph: Graph,
}

/// A running accelerated consensus instance bound to one graph.
pub struct AcConsensus {
    weights: NeighborWeights,
    params: MomentumParams,
    state: ConsensusState,
}

/// Outcome of a consensus run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AcConsensusSummary {
    pub rounds: usize,
    pub converged: bool,
    /// Largest `actual - bound` over all rounds; nonpositive when the
    /// decay guarantee held.
    pub worst_bound_excess: f64,
}

/// Outcome of a distributed median run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AcMedianSummary {
    pub step_size: f64,
    pub dispersion: f64,
    pub dispersion_bound: f64,
    pub error: f64,
    pub error_bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AcStatus {
    match err {
        Error::InvalidSize(_) => AcStatus::InvalidSize,
        Error::InvalidParameter(_) => AcStatus::InvalidParameter,
        Error::Disconnected => AcStatus::Disconnected,
        Error::Shape { .. } => AcStatus::ShapeMismatch,
        _ => AcStatus::Failed,
    }
}

fn guard<F>(body: F) -> AcStatus
where
    F: FnOnce() -> Result<(), (AcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            AcStatus::Panic
        }
    }
}

fn lift(err: Error) -> (AcStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (AcStatus, String) {
    (AcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(
    data: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (AcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn graph_ref<'a>(g: *const AcGraph) -> Result<&'a Graph, (AcStatus, String)> {
    g.as_ref().map(|h| &h.graph).ok_or_else(|| null("graph"))
}

unsafe fn emit_graph(
    out: *mut *mut AcGraph,
    build: impl FnOnce() -> accel_consensus::Result<Graph>,
) -> AcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle"));
        }
        let graph = build().map_err(lift)?;
        *out = Box::into_raw(Box::new(AcGraph { graph }));
        Ok(())
    })
}

fn schedule(u: f64) -> Result<MomentumParams, (AcStatus, String)> {
    MomentumParams::default_schedule(u).map_err(lift)
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Path on nodes `0..n`.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_line(n: usize, out: *mut *mut AcGraph) -> AcStatus {
    emit_graph(out, || line_graph(n))
}

/// Clique on the first `n/2` nodes with a path hanging off it; `n` even.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_lollipop(n: usize, out: *mut *mut AcGraph) -> AcStatus {
    emit_graph(out, || lollipop_graph(n))
}

/// `k x k` grid.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_grid(k: usize, out: *mut *mut AcGraph) -> AcStatus {
    emit_graph(out, || grid_2d(k))
}

/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_complete(n: usize, out: *mut *mut AcGraph) -> AcStatus {
    emit_graph(out, || complete_graph(n))
}

/// Star centered on node 0.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_star(n: usize, out: *mut *mut AcGraph) -> AcStatus {
    emit_graph(out, || star_graph(n))
}

/// Random geometric graph in the unit square with connection radius
/// `radius`. The result may be disconnected.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_geometric(
    n: usize,
    radius: f64,
    seed: u64,
    out: *mut *mut AcGraph,
) -> AcStatus {
    emit_graph(out, || {
        geometric_random_graph(n, radius, seed).map(|g| g.graph)
    })
}

/// Connected Erdos-Renyi graph with edge probability `p`.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_random(
    n: usize,
    p: f64,
    seed: u64,
    out: *mut *mut AcGraph,
) -> AcStatus {
    emit_graph(out, || random_connected_graph(n, p, seed))
}

/// Graph from `edge_count` pairs stored flat in `endpoints`
/// (`2 * edge_count` zero-based node ids).
///
/// # Safety
/// `endpoints` must point to `2 * edge_count` readable values and `out`
/// must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_from_edges(
    n: usize,
    endpoints: *const usize,
    edge_count: usize,
    out: *mut *mut AcGraph,
) -> AcStatus {
    let flat = match slice(endpoints, 2 * edge_count, "endpoints") {
        Ok(s) => s,
        Err((status, msg)) => {
            set_last_error(msg);
            return status;
        }
    };
    let edges: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    emit_graph(out, || Graph::from_edges(n, &edges))
}

/// # Safety
/// `g` must be null or a handle from a graph constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_free(g: *mut AcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `nodes` and `edges` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_size(
    g: *const AcGraph,
    nodes: *mut usize,
    edges: *mut usize,
) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        if let Some(n) = nodes.as_mut() {
            *n = graph.node_count();
        }
        if let Some(m) = edges.as_mut() {
            *m = graph.edge_count();
        }
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_is_connected(g: *const AcGraph, out: *mut bool) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        *out.as_mut().ok_or_else(|| null("out"))? = graph.is_connected();
        Ok(())
    })
}

/// Second largest eigenvalue of the lazy Metropolis matrix of `g`.
///
/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ac_graph_lambda2(g: *const AcGraph, out: *mut f64) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let report = lazy_metropolis(graph)
            .and_then(|m| spectral_report(&m))
            .map_err(lift)?;
        *out = report.lambda2;
        Ok(())
    })
}

/// Runs accelerated consensus from `x1` (length = node count) with size
/// bound `u` until the max-norm deviation of `x` from the average is below
/// `eps`. That final `x` is copied to `final_values` when it is not null.
///
/// # Safety
/// `g` must be a live graph handle, `x1` readable for `len` values,
/// `final_values` null or writable for `len` values, `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn ac_run_consensus(
    g: *const AcGraph,
    x1: *const f64,
    len: usize,
    u: f64,
    eps: f64,
    max_iter: usize,
    final_values: *mut f64,
    summary: *mut AcConsensusSummary,
) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let x1 = slice(x1, len, "x1")?;
        let summary = summary.as_mut().ok_or_else(|| null("summary"))?;
        let run =
            run_consensus(graph, x1, &schedule(u)?, eps, StopNorm::Inf, max_iter).map_err(lift)?;
        if !final_values.is_null() {
            std::slice::from_raw_parts_mut(final_values, len).copy_from_slice(&run.final_state.x);
        }
        *summary = AcConsensusSummary {
            rounds: run.report.rounds,
            converged: run.report.converged,
            worst_bound_excess: run.report.worst_bound_excess(),
        };
        Ok(())
    })
}

/// Starts a step-by-step consensus instance at `x1`.
///
/// # Safety
/// `g` must be a live graph handle, `x1` readable for `len` values and
/// `out` writable. The instance does not borrow `g`.
#[no_mangle]
pub unsafe extern "C" fn ac_consensus_new(
    g: *const AcGraph,
    x1: *const f64,
    len: usize,
    u: f64,
    out: *mut *mut AcConsensus,
) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let x1 = slice(x1, len, "x1")?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        if x1.len() != graph.node_count() {
            return Err(lift(Error::Shape {
                expected: graph.node_count(),
                got: x1.len(),
            }));
        }
        if !graph.is_connected() {
            return Err(lift(Error::Disconnected));
        }
        let weights = NeighborWeights::metropolis(graph).map_err(lift)?;
        let instance = AcConsensus {
            weights,
            params: schedule(u)?,
            state: ConsensusState::new(x1.to_vec()),
        };
        *out = Box::into_raw(Box::new(instance));
        Ok(())
    })
}

/// Advances the instance by `rounds` rounds.
///
/// # Safety
/// `c` must be a live consensus handle.
#[no_mangle]
pub unsafe extern "C" fn ac_consensus_step(c: *mut AcConsensus, rounds: usize) -> AcStatus {
    guard(|| {
        let c = c.as_mut().ok_or_else(|| null("consensus"))?;
        for _ in 0..rounds {
            c.state = consensus_step(&c.state, &c.weights, &c.params).map_err(lift)?;
        }
        Ok(())
    })
}

/// Current round index (1 before any step) and the averaged iterate `y`.
///
/// # Safety
/// `c` must be a live consensus handle; `round` null or writable;
/// `values` null or writable for `len` values, `len` equal to the node count.
#[no_mangle]
pub unsafe extern "C" fn ac_consensus_values(
    c: *const AcConsensus,
    round: *mut usize,
    values: *mut f64,
    len: usize,
) -> AcStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("consensus"))?;
        if let Some(r) = round.as_mut() {
            *r = c.state.t;
        }
        if !values.is_null() {
            if len != c.state.y.len() {
                return Err(lift(Error::Shape {
                    expected: c.state.y.len(),
                    got: len,
                }));
            }
            std::slice::from_raw_parts_mut(values, len).copy_from_slice(&c.state.y);
        }
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from `ac_consensus_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ac_consensus_free(c: *mut AcConsensus) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Distributed median of `targets`: node `i` holds `|theta - targets[i]|`
/// and starts at `start[i]`. Runs `rounds` rounds with size bound `u`; the
/// averaged estimates go to `estimates` when it is not null.
///
/// # Safety
/// `g` must be a live graph handle, `targets` and `start` readable for
/// `len` values, `estimates` null or writable for `len` values and
/// `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn ac_run_median(
    g: *const AcGraph,
    targets: *const f64,
    start: *const f64,
    len: usize,
    u: f64,
    rounds: usize,
    estimates: *mut f64,
    summary: *mut AcMedianSummary,
) -> AcStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let targets = slice(targets, len, "targets")?;
        let start = slice(start, len, "start")?;
        let summary = summary.as_mut().ok_or_else(|| null("summary"))?;
        let obj = ObjectiveSet::absolute(targets).map_err(lift)?;
        let r = run_optimize(graph, start, &obj, u, rounds).map_err(lift)?;
        if !estimates.is_null() {
            std::slice::from_raw_parts_mut(estimates, len).copy_from_slice(&r.yhat);
        }
        *summary = AcMedianSummary {
            step_size: r.beta,
            dispersion: r.disp,
            dispersion_bound: r.bound_disp,
            error: r.err.unwrap_or(f64::NAN),
            error_bound: r.bound_err.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
