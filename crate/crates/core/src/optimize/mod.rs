//! Decentralized subgradient optimization with momentum, the plain
//! distributed subgradient baseline, and the dispersion / error metrics.

mod objective;

use std::f64::consts::SQRT_2;
use std::io::Write;

use crate::consensus::{check_dim, mean, Averaging, MomentumParams};
use crate::error::{Error, Result};
use crate::graphs::{Graph, NeighborWeights};

pub use objective::{lower_median, parse_objective, Objective, ObjectiveSet};

/// `1 / (L sqrt(U T))`.
pub fn beta_step(lipschitz: f64, u: f64, rounds: usize) -> Result<f64> {
    if !(lipschitz > 0.0) || !(u > 0.0) || rounds == 0 {
        return Err(Error::InvalidParameter(format!(
            "step size needs L > 0, U > 0, T >= 1; got L={lipschitz}, U={u}, T={rounds}"
        )));
    }
    Ok(1.0 / (lipschitz * (u * rounds as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `y(1) + ... + y(t)`.
    pub ysum: Vec<f64>,
    /// `mean(x(1)), ..., mean(x(t))`.
    pub xbar_trace: Vec<f64>,
    pub t: usize,
}

impl OptState {
    pub fn new(x1: Vec<f64>) -> Self {
        OptState {
            xbar_trace: vec![mean(&x1)],
            y: x1.clone(),
            z: x1.clone(),
            ysum: x1.clone(),
            x: x1,
            t: 1,
        }
    }

    /// Running average `(1/t) sum_{k<=t} y(k)`.
    pub fn yhat(&self) -> Vec<f64> {
        let t = self.t as f64;
        self.ysum.iter().map(|s| s / t).collect()
    }
}

fn subgradients(obj: &ObjectiveSet, at: &[f64]) -> Vec<f64> {
    at.iter()
        .enumerate()
        .map(|(i, &v)| obj.subgradient(i, v))
        .collect()
}

/// One round of the momentum method. Subgradients are taken at `y(t)`.
pub fn optimize_step<W: Averaging + ?Sized>(
    s: &OptState,
    w: &W,
    p: &MomentumParams,
    beta: f64,
    obj: &ObjectiveSet,
) -> Result<OptState> {
    let n = w.dim();
    for len in [s.x.len(), s.y.len(), s.z.len(), s.ysum.len(), obj.len()] {
        check_dim(n, len)?;
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be non-negative, got {beta}"
        )));
    }
    let g = subgradients(obj, &s.y);
    let mut y = vec![0.0; n];
    w.average_into(&s.x, &mut y);
    for (yi, gi) in y.iter_mut().zip(&g) {
        *yi -= beta * gi;
    }
    let z: Vec<f64> = s.y.iter().zip(&g).map(|(yo, gi)| yo - beta * gi).collect();
    let m = p.momentum();
    let x: Vec<f64> = y
        .iter()
        .zip(&z)
        .map(|(&yn, &zn)| yn + m * (yn - zn))
        .collect();
    let ysum = s.ysum.iter().zip(&y).map(|(a, b)| a + b).collect();
    let mut xbar_trace = s.xbar_trace.clone();
    xbar_trace.push(mean(&x));
    Ok(OptState {
        x,
        y,
        z,
        ysum,
        xbar_trace,
        t: s.t + 1,
    })
}

/// `x(t+1) = W x(t) - alpha_step g(t)` with `g` taken at `x(t)`.
pub fn baseline_step<W: Averaging + ?Sized>(
    x: &[f64],
    w: &W,
    alpha_step: f64,
    obj: &ObjectiveSet,
) -> Result<Vec<f64>> {
    check_dim(w.dim(), x.len())?;
    check_dim(w.dim(), obj.len())?;
    if !(alpha_step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline step size must be positive, got {alpha_step}"
        )));
    }
    let g = subgradients(obj, x);
    let mut out = vec![0.0; x.len()];
    w.average_into(x, &mut out);
    for (o, gi) in out.iter_mut().zip(&g) {
        *o -= alpha_step * gi;
    }
    Ok(out)
}

/// Mean absolute deviation from the lower median.
pub fn dispersion(theta: &[f64]) -> Result<f64> {
    let med = lower_median(theta)
        .ok_or_else(|| Error::InvalidParameter("dispersion of an empty vector".into()))?;
    Ok(theta.iter().map(|v| (v - med).abs()).sum::<f64>() / theta.len() as f64)
}

/// `(1/n) sum_i f_i(theta_i) - f(w*)`. Can be negative since each node
/// evaluates only its own objective.
pub fn error_metric(theta: &[f64], obj: &ObjectiveSet) -> Result<f64> {
    check_dim(obj.len(), theta.len())?;
    let opt = obj
        .optimal_value()
        .ok_or_else(|| Error::UnsupportedMetric("error needs a known minimizer".into()))?;
    let total: f64 = theta
        .iter()
        .enumerate()
        .map(|(i, &v)| obj.get(i).value(v))
        .sum();
    Ok(total / theta.len() as f64 - opt)
}

/// Diagnostics for one round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptTraceRow {
    pub t: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    /// `mean(x(t)) - (mean(x(t-1)) - beta mean(g(t-1)))`; zero at `t = 1`.
    pub recursion_residual: f64,
    /// `|y(t) - mean(x(t)) 1|_1`.
    pub l1_dev_from_xbar: f64,
    pub disp_running: f64,
    pub err_running: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OptReport {
    pub yhat: Vec<f64>,
    pub beta: f64,
    pub disp: f64,
    pub err: Option<f64>,
    pub bound_disp: f64,
    pub bound_err: Option<f64>,
    /// True when `U >= n`, the regime in which both bounds are guaranteed.
    pub bounds_apply: bool,
    pub trace: Vec<OptTraceRow>,
}

impl OptReport {
    pub fn disp_within_bound(&self, slack: f64) -> bool {
        self.disp <= self.bound_disp + slack
    }

    /// `None` when the minimizer is unknown.
    pub fn err_within_bound(&self, slack: f64) -> Option<bool> {
        Some(self.err? <= self.bound_err? + slack)
    }
}

fn l2_dev(v: &[f64], center: f64) -> f64 {
    v.iter().map(|e| (e - center).powi(2)).sum::<f64>().sqrt()
}

/// Explicit dispersion bound
/// `18 sqrt2 sqrt(U/T) + 18 sqrt2 U D / (sqrt(n) T)` with
/// `D = |y(1) - mean 1|_2`.
pub fn dispersion_bound(n: usize, u: f64, rounds: usize, initial_dev: f64) -> f64 {
    let c = 18.0 * SQRT_2;
    let t = rounds as f64;
    c * (u / t).sqrt() + c * u * initial_dev / ((n as f64).sqrt() * t)
}

/// Six-term explicit error bound; `start_gap = mean(x(1)) - w*`.
pub fn error_bound(
    n: usize,
    u: f64,
    rounds: usize,
    lipschitz: f64,
    start_gap: f64,
    initial_dev: f64,
) -> f64 {
    let (l, t, sn) = (lipschitz, rounds as f64, (n as f64).sqrt());
    let c18 = 18.0 * SQRT_2;
    let c36 = 36.0 * SQRT_2;
    l * u.sqrt() * start_gap * start_gap / (2.0 * t.sqrt())
        + l / (2.0 * t.sqrt() * u.sqrt())
        + c36 * l * (u / t).sqrt()
        + c36 * l * u * initial_dev / (t * sn)
        + c18 * l * u.sqrt() / t.sqrt()
        + c18 * l * u * initial_dev / (sn * t)
}

/// Runs the momentum method for horizon `T` with `beta = 1/(L sqrt(UT))` and
/// the default momentum schedule. `yhat` averages `y(1), ..., y(T)`, so
/// `T - 1` updates are applied.
pub fn run_optimize(
    g: &Graph,
    x1: &[f64],
    obj: &ObjectiveSet,
    u: f64,
    rounds: usize,
) -> Result<OptReport> {
    g.require_connected()?;
    let w = NeighborWeights::metropolis(g)?;
    run_optimize_with(&w, x1, obj, u, rounds)
}

pub fn run_optimize_with<W: Averaging + ?Sized>(
    w: &W,
    x1: &[f64],
    obj: &ObjectiveSet,
    u: f64,
    rounds: usize,
) -> Result<OptReport> {
    let n = w.dim();
    check_dim(n, x1.len())?;
    check_dim(n, obj.len())?;
    let p = MomentumParams::default_schedule(u)?;
    let beta = beta_step(obj.lipschitz(), u, rounds)?;

    let mut state = OptState::new(x1.to_vec());
    let mut trace = Vec::with_capacity(rounds);
    let record = |s: &OptState, residual: f64| -> Result<OptTraceRow> {
        let mean_x = mean(&s.x);
        let yhat = s.yhat();
        Ok(OptTraceRow {
            t: s.t,
            mean_x,
            mean_y: mean(&s.y),
            mean_z: mean(&s.z),
            recursion_residual: residual,
            l1_dev_from_xbar: s.y.iter().map(|v| (v - mean_x).abs()).sum(),
            disp_running: dispersion(&yhat)?,
            err_running: error_metric(&yhat, obj).ok(),
        })
    };
    trace.push(record(&state, 0.0)?);
    while state.t < rounds {
        let mean_g = mean(&subgradients(obj, &state.y));
        let before = mean(&state.x);
        state = optimize_step(&state, w, &p, beta, obj)?;
        let residual = mean(&state.x) - (before - beta * mean_g);
        trace.push(record(&state, residual)?);
    }

    let yhat = state.yhat();
    let xbar = mean(x1);
    let initial_dev = l2_dev(x1, xbar);
    let disp = dispersion(&yhat)?;
    let err = error_metric(&yhat, obj).ok();
    let bound_err = obj
        .optimum()
        .map(|opt| error_bound(n, u, rounds, obj.lipschitz(), xbar - opt, initial_dev));
    Ok(OptReport {
        yhat,
        beta,
        disp,
        err,
        bound_disp: dispersion_bound(n, u, rounds, initial_dev),
        bound_err,
        bounds_apply: u >= n as f64,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    /// `(1/T) sum_{k<=T} x(k)`.
    pub xhat: Vec<f64>,
    pub alpha_step: f64,
    pub disp: f64,
    pub err: Option<f64>,
}

/// Plain distributed subgradient method over the lazy Metropolis weights of
/// `g` for horizon `T`. The step defaults to `1/(L sqrt(nT))`.
pub fn run_baseline(
    g: &Graph,
    x1: &[f64],
    obj: &ObjectiveSet,
    rounds: usize,
    alpha_step: Option<f64>,
) -> Result<BaselineReport> {
    g.require_connected()?;
    let w = NeighborWeights::metropolis(g)?;
    let n = g.node_count();
    check_dim(n, x1.len())?;
    let alpha_step = match alpha_step {
        Some(a) => a,
        None => beta_step(obj.lipschitz(), n as f64, rounds)?,
    };
    let mut x = x1.to_vec();
    let mut xsum = x.clone();
    for _ in 1..rounds {
        x = baseline_step(&x, &w, alpha_step, obj)?;
        for (s, v) in xsum.iter_mut().zip(&x) {
            *s += v;
        }
    }
    let xhat: Vec<f64> = xsum.iter().map(|s| s / rounds as f64).collect();
    Ok(BaselineReport {
        disp: dispersion(&xhat)?,
        err: error_metric(&xhat, obj).ok(),
        xhat,
        alpha_step,
    })
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|e| e.to_string()).unwrap_or_default()
}

/// Per-round CSV followed by a `# disp=...,bound_disp=...,err=...,bound_err=...`
/// summary line. Unknown error values are left empty.
pub fn write_opt_csv<W: Write>(report: &OptReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,xbar,l1_dev_from_xbar,disp_running,err_running")?;
    for row in &report.trace {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.t,
            row.mean_x,
            row.l1_dev_from_xbar,
            row.disp_running,
            opt_field(row.err_running)
        )?;
    }
    writeln!(
        out,
        "# disp={},bound_disp={},err={},bound_err={}",
        report.disp,
        report.bound_disp,
        opt_field(report.err),
        opt_field(report.bound_err)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{consensus_step, ConsensusState};
    use crate::graphs::{line_graph, lollipop_graph, StochasticMatrix};

    fn median_targets(n: usize) -> Vec<f64> {
        let half: Vec<f64> = (1..=n / 2).map(|i| (i % 10) as f64).collect();
        half.iter()
            .copied()
            .chain(half.iter().map(|v| -v))
            .collect()
    }

    #[test]
    fn beta_examples() {
        assert!((beta_step(1.0, 4.0, 100).unwrap() - 0.05).abs() < 1e-15);
        assert!((beta_step(2.0, 1.0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(beta_step(0.0, 1.0, 1).is_err());
        assert!(beta_step(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn dispersion_examples() {
        assert!((dispersion(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(dispersion(&[4.0; 5]).unwrap(), 0.0);
        assert_eq!(dispersion(&[0.0, 0.0, 10.0, 10.0]).unwrap(), 5.0);
        assert!(dispersion(&[]).is_err());
    }

    #[test]
    fn error_metric_examples() {
        let obj = ObjectiveSet::absolute(&[0.0, 2.0]).unwrap();
        assert_eq!(error_metric(&[0.0, 2.0], &obj).unwrap(), -1.0);
        assert_eq!(error_metric(&[1.0, 1.0], &obj).unwrap(), 0.0);
        let w = obj.optimum().unwrap();
        assert_eq!(error_metric(&[w, w], &obj).unwrap(), 0.0);
        let unknown = ObjectiveSet::new(vec![Objective::Zero], 1.0, None).unwrap();
        assert!(matches!(
            error_metric(&[0.0], &unknown),
            Err(Error::UnsupportedMetric(_))
        ));
    }

    #[test]
    fn zero_step_reproduces_consensus() {
        let g = lollipop_graph(10).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(10.0).unwrap();
        let obj = ObjectiveSet::zero(10).unwrap();
        let x1: Vec<f64> = (0..10).map(|i| (i * i) as f64 * 0.1 - 2.0).collect();
        let mut a = OptState::new(x1.clone());
        let mut b = ConsensusState::new(x1);
        for _ in 0..200 {
            a = optimize_step(&a, &w, &p, 0.0, &obj).unwrap();
            b = consensus_step(&b, &w, &p).unwrap();
            for (u, v) in a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_node_mean_drops_by_beta() {
        let g = line_graph(2).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(2.0).unwrap();
        let obj = ObjectiveSet::absolute(&[0.0, 0.0]).unwrap();
        let beta = 0.1;
        let mut s = OptState::new(vec![1.0, 1.0]);
        for k in 1..=5 {
            s = optimize_step(&s, &w, &p, beta, &obj).unwrap();
            assert!((mean(&s.x) - (1.0 - beta * k as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_at_common_minimizer() {
        let g = line_graph(4).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let p = MomentumParams::default_schedule(4.0).unwrap();
        let obj = ObjectiveSet::absolute(&[1.5; 4]).unwrap();
        let s = OptState::new(vec![1.5; 4]);
        let next = optimize_step(&s, &w, &p, 0.3, &obj).unwrap();
        assert_eq!(next.x, s.x);
        assert_eq!(next.y, s.y);
        assert_eq!(next.z, s.z);
    }

    #[test]
    fn shape_errors() {
        let w = NeighborWeights::metropolis(&line_graph(3).unwrap()).unwrap();
        let p = MomentumParams::default_schedule(3.0).unwrap();
        let obj = ObjectiveSet::zero(3).unwrap();
        let s = OptState::new(vec![0.0; 2]);
        assert!(matches!(
            optimize_step(&s, &w, &p, 0.1, &obj),
            Err(Error::Shape { .. })
        ));
        assert!(baseline_step(&[0.0; 4], &w, 0.1, &obj).is_err());
    }

    #[test]
    fn baseline_scalar_step() {
        let w = StochasticMatrix::from_row_major(1, vec![1.0]).unwrap();
        let obj = ObjectiveSet::absolute(&[0.0]).unwrap();
        let x = baseline_step(&[0.5], &w, 0.1, &obj).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-15);
        assert!(baseline_step(&[0.5], &w, 0.0, &obj).is_err());
    }

    #[test]
    fn baseline_without_subgradient_is_averaging() {
        let g = line_graph(3).unwrap();
        let w = NeighborWeights::metropolis(&g).unwrap();
        let obj = ObjectiveSet::zero(3).unwrap();
        let x = baseline_step(&[1.0, 0.0, 0.0], &w, 0.2, &obj).unwrap();
        let dense = crate::graphs::lazy_metropolis(&g)
            .unwrap()
            .apply(&[1.0, 0.0, 0.0]);
        assert_eq!(x, dense);
    }

    #[test]
    fn median_experiment_line_100() {
        let n = 100;
        let w = median_targets(n);
        let obj = ObjectiveSet::absolute(&w).unwrap();
        assert_eq!(obj.optimum(), Some(0.0));
        let r = run_optimize(&line_graph(n).unwrap(), &w, &obj, n as f64, 4 * n).unwrap();
        let avg_abs = r.yhat.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        assert!(r.bounds_apply);
        assert!(r.disp_within_bound(1e-9));
        assert!(avg_abs <= r.bound_disp);
        assert_eq!(r.err_within_bound(1e-9), Some(true));
        assert_eq!(r.trace.len(), 4 * n);
    }

    #[test]
    fn means_track_the_recursion() {
        let n = 20;
        let w = median_targets(n);
        let obj = ObjectiveSet::absolute(&w).unwrap();
        let r = run_optimize(&lollipop_graph(n).unwrap(), &w, &obj, n as f64, 80).unwrap();
        for row in &r.trace {
            assert!((row.mean_x - row.mean_y).abs() < 1e-9);
            assert!((row.mean_x - row.mean_z).abs() < 1e-9);
            assert!(row.recursion_residual.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_objective_reaches_average() {
        let n = 10;
        let g = line_graph(n).unwrap();
        let x1: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let obj = ObjectiveSet::zero(n).unwrap();
        let r = run_optimize(&g, &x1, &obj, n as f64, 20_000).unwrap();
        // yhat carries the transient, which washes out like 1/T.
        for v in &r.yhat {
            assert!((v - 4.5).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn single_node_matches_scalar_method() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let obj = ObjectiveSet::absolute(&[3.0]).unwrap();
        let rounds = 10_000;
        let r = run_optimize(&g, &[0.0], &obj, 1.0, rounds).unwrap();
        // Scalar reference with momentum, written out directly.
        let beta = 1.0 / (rounds as f64).sqrt();
        let momentum = 1.0 - 2.0 / 10.0;
        let sign = |v: f64| {
            if v > 3.0 {
                1.0
            } else if v < 3.0 {
                -1.0
            } else {
                0.0
            }
        };
        let (mut x, mut y, mut sum) = (0.0f64, 0.0f64, 0.0f64);
        sum += y;
        for _ in 1..rounds {
            let gr = sign(y);
            let yn = x - beta * gr;
            let zn = y - beta * gr;
            x = yn + momentum * (yn - zn);
            y = yn;
            sum += y;
        }
        let reference = sum / rounds as f64;
        assert!((r.yhat[0] - reference).abs() < 1e-9);
        assert!((r.yhat[0] - 3.0).abs() < 0.2, "{}", r.yhat[0]);
    }

    #[test]
    fn momentum_beats_baseline_on_line_50() {
        let n = 50;
        let g = line_graph(n).unwrap();
        let w = median_targets(n);
        let obj = ObjectiveSet::absolute(&w).unwrap();
        let fast = run_optimize(&g, &w, &obj, n as f64, 4 * n).unwrap();
        let slow = run_baseline(&g, &w, &obj, 4 * n, None).unwrap();
        assert!(fast.disp <= slow.disp, "{} vs {}", fast.disp, slow.disp);
    }

    #[test]
    fn csv_shape() {
        let n = 6;
        let w = median_targets(n);
        let obj = ObjectiveSet::absolute(&w).unwrap();
        let r = run_optimize(&line_graph(n).unwrap(), &w, &obj, n as f64, 12).unwrap();
        let mut buf = Vec::new();
        write_opt_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,xbar,l1_dev_from_xbar,disp_running,err_running");
        assert_eq!(lines.len(), 12 + 2);
        assert!(lines.last().unwrap().starts_with("# disp="));
    }
}
