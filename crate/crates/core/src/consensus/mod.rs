//! Accelerated average consensus.
//!
//! Each node keeps a pair `(x_i, y_i)`, starts with `y_i(1) = x_i(1)` and
//! repeats
//!
//! ```text
//! y_i(t+1) = x_i(t) + 1/2 * sum_{j in N(i)} (x_j(t) - x_i(t)) / max(d(i), d(j))
//! x_i(t+1) = y_i(t+1) + (1 - gamma) * (y_i(t+1) - y_i(t))
//! ```
//!
//! With `gamma = 2/(9U + 1)` and any `U >= n` the squared distance of `y(t)`
//! from the average contracts like `2 (1 - 1/(9U))^(t-1)`.

mod oracle;
mod trace;

use crate::error::{Error, Result};
use crate::graphs::{Graph, NeighborWeights, StochasticMatrix};

pub use oracle::{block_iterate, spectral_coordinates, spectral_simulate, SpectralTrajectory};
pub use trace::write_trace_csv;

/// Momentum schedule: `gamma` is the momentum gap, `alpha = 2 - gamma` the
/// extrapolation weight and `eta` the geometric rate of the governing bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumParams {
    pub u: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl MomentumParams {
    /// `gamma = 2/(9U + 1)`, `eta = 1 - 1/(9U)`.
    pub fn default_schedule(u: f64) -> Result<Self> {
        if !(u >= 1.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "node-count bound U must be >= 1, got {u}"
            )));
        }
        let gamma = 2.0 / (9.0 * u + 1.0);
        Ok(MomentumParams {
            u,
            gamma,
            alpha: 2.0 - gamma,
            eta: 1.0 - 1.0 / (9.0 * u),
        })
    }

    /// Grid / geometric-graph schedule `gamma = 2/(c sqrt(U ln U) + 1)`,
    /// `eta = 1 - gamma`. The constant `c` is not pinned by theory.
    pub fn grid_schedule(u: f64, c: f64) -> Result<Self> {
        if !(u >= 2.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid schedule needs U >= 2, got {u}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid schedule constant must be positive, got {c}"
            )));
        }
        let gamma = 2.0 / (c * (u * u.ln()).sqrt() + 1.0);
        Ok(MomentumParams {
            u,
            gamma,
            alpha: 2.0 - gamma,
            eta: 1.0 - gamma,
        })
    }

    /// Weight on `y(t+1) - y(t)` in the extrapolation step.
    pub fn momentum(&self) -> f64 {
        1.0 - self.gamma
    }
}

/// Anything that performs one averaging product `out = W x`.
pub trait Averaging {
    fn dim(&self) -> usize;
    fn average_into(&self, x: &[f64], out: &mut [f64]);
}

impl Averaging for NeighborWeights {
    fn dim(&self) -> usize {
        NeighborWeights::dim(self)
    }

    fn average_into(&self, x: &[f64], out: &mut [f64]) {
        self.lazy_apply_into(x, out)
    }
}

impl Averaging for StochasticMatrix {
    fn dim(&self) -> usize {
        StochasticMatrix::dim(self)
    }

    fn average_into(&self, x: &[f64], out: &mut [f64]) {
        self.apply_into(x, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: usize,
}

impl ConsensusState {
    pub fn new(x1: Vec<f64>) -> Self {
        ConsensusState {
            y: x1.clone(),
            x: x1,
            t: 1,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}

/// One synchronous round. The averaging operator is either the sparse
/// neighbor form or a dense lazy Metropolis matrix.
pub fn consensus_step<W: Averaging + ?Sized>(
    s: &ConsensusState,
    w: &W,
    p: &MomentumParams,
) -> Result<ConsensusState> {
    check_dim(w.dim(), s.x.len())?;
    check_dim(w.dim(), s.y.len())?;
    let mut y = vec![0.0; s.x.len()];
    w.average_into(&s.x, &mut y);
    let m = p.momentum();
    let x = y
        .iter()
        .zip(&s.y)
        .map(|(&yn, &yo)| yn + m * (yn - yo))
        .collect();
    Ok(ConsensusState { x, y, t: s.t + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopNorm {
    Inf,
    Two,
}

/// Per-round record of a run plus the stopping round.
///
/// `l2sq_dev[k]` and `bound[k]` describe round `t = k + 1`.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// First round meeting the stopping rule, or the iteration cap when
    /// `converged` is false.
    pub rounds: usize,
    pub converged: bool,
    pub l2sq_dev: Vec<f64>,
    pub linf_dev: Vec<f64>,
    pub bound: Vec<f64>,
}

impl ConvergenceReport {
    /// Largest `actual - bound` over the run (non-positive when the bound
    /// dominates everywhere).
    pub fn worst_bound_excess(&self) -> f64 {
        self.l2sq_dev
            .iter()
            .zip(&self.bound)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ConsensusRun {
    pub report: ConvergenceReport,
    pub final_state: ConsensusState,
    pub mean: f64,
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn deviation_norms(v: &[f64], center: f64) -> (f64, f64, f64) {
    let mut sq = 0.0;
    let mut inf = 0.0f64;
    for &e in v {
        let d = e - center;
        sq += d * d;
        inf = inf.max(d.abs());
    }
    (sq, inf, sq.sqrt())
}

/// Runs the protocol on `g` from `x1` until the chosen norm of
/// `x(t) - mean(x1)` drops below `eps` or `max_iter` rounds have been
/// examined.
pub fn run_consensus(
    g: &Graph,
    x1: &[f64],
    p: &MomentumParams,
    eps: f64,
    norm: StopNorm,
    max_iter: usize,
) -> Result<ConsensusRun> {
    g.require_connected()?;
    let w = NeighborWeights::metropolis(g)?;
    run_consensus_with(&w, x1, p, eps, norm, max_iter)
}

/// [`run_consensus`] over an arbitrary averaging operator.
pub fn run_consensus_with<W: Averaging + ?Sized>(
    w: &W,
    x1: &[f64],
    p: &MomentumParams,
    eps: f64,
    norm: StopNorm,
    max_iter: usize,
) -> Result<ConsensusRun> {
    check_dim(w.dim(), x1.len())?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let xbar = mean(x1);
    let mut state = ConsensusState::new(x1.to_vec());
    let initial = deviation_norms(&state.y, xbar).0;

    let mut report = ConvergenceReport {
        rounds: max_iter,
        converged: false,
        l2sq_dev: Vec::new(),
        linf_dev: Vec::new(),
        bound: Vec::new(),
    };
    loop {
        let (y_sq, _, _) = deviation_norms(&state.y, xbar);
        let (_, x_inf, x_two) = deviation_norms(&state.x, xbar);
        report.l2sq_dev.push(y_sq);
        report.linf_dev.push(x_inf);
        report
            .bound
            .push(2.0 * p.eta.powi(state.t as i32 - 1) * initial);
        let dev = match norm {
            StopNorm::Inf => x_inf,
            StopNorm::Two => x_two,
        };
        if dev < eps {
            report.rounds = state.t;
            report.converged = true;
            break;
        }
        if state.t >= max_iter {
            break;
        }
        state = consensus_step(&state, w, p)?;
    }
    Ok(ConsensusRun {
        report,
        final_state: state,
        mean: xbar,
    })
}

/// Round by which the geometric bound guarantees `|x(t) - mean|_2 < eps`
/// (and hence the infinity norm), given `initial_sq = |y(1) - mean|_2^2`.
///
/// Uses `x(t) - m = alpha (y(t) - m) - (alpha - 1)(y(t-1) - m)` and the bound
/// `|y(s) - m|^2 <= 2 eta^(s-1) initial_sq` at both rounds.
pub fn guaranteed_rounds(p: &MomentumParams, initial_sq: f64, eps: f64) -> usize {
    if initial_sq.sqrt() < eps {
        return 1;
    }
    let lead = 2.0 * p.alpha - 1.0;
    let ratio = eps * eps / (2.0 * lead * lead * initial_sq);
    if ratio >= 1.0 {
        return 2;
    }
    let k = ratio.ln() / p.eta.ln();
    2 + k.floor() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{complete_graph, lazy_metropolis, line_graph, random_connected_graph};

    #[test]
    fn default_schedule_examples() {
        let p = MomentumParams::default_schedule(1.0).unwrap();
        assert!((p.gamma - 0.2).abs() < 1e-15);
        assert!((p.alpha - 1.8).abs() < 1e-15);
        assert!((p.eta - 8.0 / 9.0).abs() < 1e-15);
        let p2 = MomentumParams::default_schedule(2.0).unwrap();
        assert!((p2.alpha - 1.0 - 17.0 / 19.0).abs() < 1e-15);
        assert!(matches!(
            MomentumParams::default_schedule(0.5),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn grid_schedule_examples() {
        let e2 = std::f64::consts::E.powi(2);
        let p = MomentumParams::grid_schedule(e2, 1.0).unwrap();
        let expected = 2.0 / (std::f64::consts::E * 2f64.sqrt() + 1.0);
        assert!((p.gamma - expected).abs() < 1e-14);
        assert!((p.eta - (1.0 - p.gamma)).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for c in [0.5, 1.0, 3.0, 10.0, 1e3, 1e6] {
            let g = MomentumParams::grid_schedule(100.0, c).unwrap().gamma;
            assert!(g < last && g > 0.0);
            last = g;
        }
        assert!(last < 1e-6);
        assert!(MomentumParams::grid_schedule(1.5, 1.0).is_err());
        assert!(MomentumParams::grid_schedule(10.0, 0.0).is_err());
    }

    #[test]
    fn constant_vector_is_fixed_point() {
        let g = random_connected_graph(12, 0.2, 3).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(12.0).unwrap();
        let s = ConsensusState::new(vec![2.5; 12]);
        let next = consensus_step(&s, &w, &p).unwrap();
        assert_eq!(next.x, vec![2.5; 12]);
        assert_eq!(next.y, vec![2.5; 12]);
        assert_eq!(next.t, 2);
    }

    #[test]
    fn two_node_hand_computed_step() {
        let g = line_graph(2).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(2.0).unwrap();
        let s = consensus_step(&ConsensusState::new(vec![1.0, 0.0]), &w, &p).unwrap();
        assert_eq!(s.y, vec![0.5, 0.5]);
        assert!((s.x[0] - 1.0 / 19.0).abs() < 1e-15);
        assert!((s.x[1] - 18.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn step_preserves_mean() {
        let g = line_graph(3).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(3.0).unwrap();
        let s = consensus_step(&ConsensusState::new(vec![1.0, 0.0, 0.0]), &w, &p).unwrap();
        assert!((mean(&s.y) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn neighbor_and_matrix_forms_agree() {
        let g = random_connected_graph(25, 0.1, 9).unwrap();
        let sparse = NeighborWeights::metropolis(&g).unwrap();
        let dense = lazy_metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(25.0).unwrap();
        let x1: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut a = ConsensusState::new(x1.clone());
        let mut b = ConsensusState::new(x1);
        for _ in 0..50 {
            a = consensus_step(&a, &sparse, &p).unwrap();
            b = consensus_step(&b, &dense, &p).unwrap();
            for (u, v) in a.y.iter().zip(&b.y) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let w = NeighborWeights::metropolis(&line_graph(3).unwrap()).unwrap();
        let p = MomentumParams::default_schedule(3.0).unwrap();
        let err = consensus_step(&ConsensusState::new(vec![0.0; 4]), &w, &p);
        assert!(matches!(
            err,
            Err(Error::Shape {
                expected: 3,
                got: 4
            })
        ));
    }

    #[test]
    fn converged_start_takes_one_round() {
        let g = complete_graph(5).unwrap();
        let p = MomentumParams::default_schedule(5.0).unwrap();
        let run = run_consensus(&g, &[1.0; 5], &p, 1e-2, StopNorm::Inf, 100).unwrap();
        assert_eq!(run.report.rounds, 1);
        assert!(run.report.converged);
    }

    #[test]
    fn line_8_converges_within_700_rounds() {
        let g = line_graph(8).unwrap();
        let p = MomentumParams::default_schedule(8.0).unwrap();
        let mut x1 = vec![0.0; 8];
        x1[0] = 1.0;
        let run = run_consensus(&g, &x1, &p, 1e-2, StopNorm::Inf, DEFAULT_MAX_ITER).unwrap();
        assert!(run.report.converged);
        assert!(run.report.rounds <= 700, "{}", run.report.rounds);
        assert!(run.report.worst_bound_excess() <= 1e-9);
        assert!(run.report.rounds <= guaranteed_rounds(&p, 7.0 / 8.0, 1e-2));
    }

    #[test]
    fn iteration_cap_is_a_sentinel() {
        let g = line_graph(40).unwrap();
        let p = MomentumParams::default_schedule(40.0).unwrap();
        let mut x1 = vec![0.0; 40];
        x1[0] = 1.0;
        let run = run_consensus(&g, &x1, &p, 1e-12, StopNorm::Two, 10).unwrap();
        assert!(!run.report.converged);
        assert_eq!(run.report.rounds, 10);
        assert_eq!(run.report.l2sq_dev.len(), 10);
        assert_eq!(run.final_state.t, 10);
    }

    #[test]
    fn bad_inputs() {
        let p = MomentumParams::default_schedule(4.0).unwrap();
        let g = line_graph(4).unwrap();
        assert!(matches!(
            run_consensus(&g, &[0.0; 4], &p, 0.0, StopNorm::Inf, 10),
            Err(Error::InvalidParameter(_))
        ));
        let split = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            run_consensus(&split, &[0.0; 4], &p, 0.1, StopNorm::Inf, 10),
            Err(Error::Disconnected)
        ));
    }
}
