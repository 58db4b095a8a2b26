use crate::consensus::{consensus_step, ConsensusState, ConvergenceReport, MomentumParams};
use crate::error::{Error, Result};
use crate::graphs::{Graph, NeighborWeights};

use super::{max_abs_dev_to, sq_dist_to, Points};

/// Leaders hold `value` fixed; `u` bounds the node count.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderConfig {
    leaders: Vec<usize>,
    is_leader: Vec<bool>,
    pub value: Vec<f64>,
    pub u: f64,
}

impl LeaderConfig {
    pub fn new(n: usize, leaders: &[usize], value: Vec<f64>, u: f64) -> Result<Self> {
        if leaders.is_empty() {
            return Err(Error::Config("leader set must be nonempty".into()));
        }
        if value.is_empty() {
            return Err(Error::Config(
                "leader value needs at least one coordinate".into(),
            ));
        }
        let mut is_leader = vec![false; n];
        for &i in leaders {
            if i >= n {
                return Err(Error::Config(format!(
                    "leader {i} out of range for {n} nodes"
                )));
            }
            is_leader[i] = true;
        }
        let leaders = (0..n).filter(|&i| is_leader[i]).collect();
        Ok(LeaderConfig {
            leaders,
            is_leader,
            value,
            u,
        })
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn is_leader(&self, i: usize) -> bool {
        self.is_leader[i]
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    /// `1 - 2/(18U + 1)`.
    pub fn momentum(&self) -> Result<f64> {
        Ok(MomentumParams::default_schedule(2.0 * self.u)?.momentum())
    }

    /// `1 - 1/(18U)`.
    pub fn rate(&self) -> Result<f64> {
        Ok(MomentumParams::default_schedule(2.0 * self.u)?.eta)
    }
}

/// Positions `x` and auxiliaries `y`; leader rows of both stay at the
/// leader value.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    pub x: Points,
    pub y: Points,
    pub t: usize,
}

impl LeaderState {
    pub fn new(x1: &[Vec<f64>], cfg: &LeaderConfig) -> Result<Self> {
        check_shape(x1, cfg)?;
        let x: Points = x1
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                if cfg.is_leader(i) {
                    cfg.value.clone()
                } else {
                    xi.clone()
                }
            })
            .collect();
        Ok(LeaderState {
            y: x.clone(),
            x,
            t: 1,
        })
    }
}

fn check_shape(x: &[Vec<f64>], cfg: &LeaderConfig) -> Result<()> {
    if x.len() != cfg.is_leader.len() {
        return Err(Error::Shape {
            expected: cfg.is_leader.len(),
            got: x.len(),
        });
    }
    if let Some(bad) = x.iter().find(|v| v.len() != cfg.dim()) {
        return Err(Error::Shape {
            expected: cfg.dim(),
            got: bad.len(),
        });
    }
    Ok(())
}

fn step_with(
    s: &LeaderState,
    w: &NeighborWeights,
    cfg: &LeaderConfig,
    momentum: f64,
) -> LeaderState {
    let n = s.x.len();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        if cfg.is_leader(i) {
            x.push(cfg.value.clone());
            y.push(cfg.value.clone());
            continue;
        }
        let xi = &s.x[i];
        let yi: Vec<f64> = (0..xi.len())
            .map(|c| {
                let pull: f64 = w
                    .row(i)
                    .iter()
                    .map(|&(j, wij)| wij * (s.x[j][c] - xi[c]))
                    .sum();
                xi[c] + 0.5 * pull
            })
            .collect();
        x.push(
            yi.iter()
                .zip(&s.y[i])
                .map(|(a, b)| a + momentum * (a - b))
                .collect(),
        );
        y.push(yi);
    }
    LeaderState { x, y, t: s.t + 1 }
}

/// One round: leaders re-pin to the value, every other node averages with
/// lazy Metropolis weights and extrapolates with momentum `1 - 2/(18U+1)`.
pub fn leader_step(s: &LeaderState, g: &Graph, cfg: &LeaderConfig) -> Result<LeaderState> {
    check_shape(&s.x, cfg)?;
    check_shape(&s.y, cfg)?;
    let w = NeighborWeights::metropolis(g)?;
    Ok(step_with(s, &w, cfg, cfg.momentum()?))
}

#[derive(Debug, Clone)]
pub struct LeaderRun {
    /// `l2sq_dev` holds `sum_i |y_i(t) - v|^2`.
    pub report: ConvergenceReport,
    pub final_state: LeaderState,
}

/// Iterates until `sum_i |y_i(t) - v|^2 < eps^2`, recording the bound
/// `2 (1 - 1/(18U))^(t-1)` times the initial distance.
pub fn run_leader_follow(
    g: &Graph,
    cfg: &LeaderConfig,
    x1: &[Vec<f64>],
    eps: f64,
    max_iter: usize,
) -> Result<LeaderRun> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let w = NeighborWeights::metropolis(g)?;
    let momentum = cfg.momentum()?;
    let rate = cfg.rate()?;
    let mut state = LeaderState::new(x1, cfg)?;
    let initial = sq_dist_to(&state.y, &cfg.value);
    let mut report = ConvergenceReport {
        rounds: max_iter,
        converged: false,
        l2sq_dev: Vec::new(),
        linf_dev: Vec::new(),
        bound: Vec::new(),
    };
    loop {
        let dev = sq_dist_to(&state.y, &cfg.value);
        report.l2sq_dev.push(dev);
        report.linf_dev.push(max_abs_dev_to(&state.y, &cfg.value));
        report
            .bound
            .push(2.0 * rate.powi(state.t as i32 - 1) * initial);
        if dev < eps * eps {
            report.rounds = state.t;
            report.converged = true;
            break;
        }
        if state.t >= max_iter {
            break;
        }
        state = step_with(&state, &w, cfg, momentum);
    }
    Ok(LeaderRun {
        report,
        final_state: state,
    })
}

/// `x(1), ..., x(rounds)` of the leader protocol.
pub fn leader_trajectory(
    g: &Graph,
    cfg: &LeaderConfig,
    x1: &[Vec<f64>],
    rounds: usize,
) -> Result<Vec<Points>> {
    let w = NeighborWeights::metropolis(g)?;
    let momentum = cfg.momentum()?;
    let mut state = LeaderState::new(x1, cfg)?;
    let mut out = vec![state.x.clone()];
    while state.t < rounds {
        state = step_with(&state, &w, cfg, momentum);
        out.push(state.x.clone());
    }
    Ok(out)
}

/// Graph in which each follower `i` is split into a copy `i^A` (index `i`)
/// and a mirror copy `i^B` (indices `n..`); leaders keep a single node.
#[derive(Debug, Clone)]
pub struct DoubledGraph {
    pub graph: Graph,
    /// `mirror[i]` is the index of `i^B`, or `None` for leaders.
    pub mirror: Vec<Option<usize>>,
    /// Each doubled edge carries the Metropolis weight of the original edge
    /// in `g`, which keeps the follower rows identical to the original.
    pub inherited: NeighborWeights,
}

pub fn doubled_graph(g: &Graph, cfg: &LeaderConfig) -> Result<DoubledGraph> {
    g.require_connected()?;
    let n = g.node_count();
    if cfg.is_leader.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: cfg.is_leader.len(),
        });
    }
    let mut mirror = vec![None; n];
    let mut next = n;
    for (i, m) in mirror.iter_mut().enumerate() {
        if !cfg.is_leader(i) {
            *m = Some(next);
            next += 1;
        }
    }
    let mut edges = Vec::new();
    let mut weighted = Vec::new();
    for (i, j) in g.edges() {
        let w = 1.0 / g.degree(i).max(g.degree(j)) as f64;
        let pairs: Vec<(usize, usize)> = match (mirror[i], mirror[j]) {
            (Some(ib), Some(jb)) => vec![(i, j), (ib, jb)],
            (None, Some(jb)) => vec![(i, j), (i, jb)],
            (Some(ib), None) => vec![(i, j), (ib, j)],
            // Kept so that an all-leader set leaves the graph unchanged.
            (None, None) => vec![(i, j)],
        };
        for (a, b) in pairs {
            edges.push((a, b));
            weighted.push((a, b, w));
        }
    }
    Ok(DoubledGraph {
        graph: Graph::from_edges(next, &edges)?,
        mirror,
        inherited: NeighborWeights::from_weighted_edges(next, &weighted)?,
    })
}

impl DoubledGraph {
    /// Initial values after shifting the leader value to 0: `x_i - v` on
    /// `i^A`, `-(x_i - v)` on `i^B`, 0 on leaders.
    pub fn mirrored_initial(&self, x1: &[f64], v: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.graph.node_count()];
        for (i, m) in self.mirror.iter().enumerate() {
            if let Some(b) = *m {
                out[i] = x1[i] - v;
                out[b] = -(x1[i] - v);
            }
        }
        out
    }
}

/// Leader trajectory recomputed as plain accelerated consensus with bound
/// `2U` on the doubled graph, one coordinate at a time, then shifted back.
pub fn doubled_graph_trajectory(
    g: &Graph,
    cfg: &LeaderConfig,
    x1: &[Vec<f64>],
    rounds: usize,
) -> Result<Vec<Points>> {
    check_shape(x1, cfg)?;
    let dg = doubled_graph(g, cfg)?;
    let params = MomentumParams::default_schedule(2.0 * cfg.u)?;
    let n = g.node_count();
    let mut out = vec![vec![vec![0.0; cfg.dim()]; n]; rounds];
    for c in 0..cfg.dim() {
        let v = cfg.value[c];
        let coord: Vec<f64> = x1.iter().map(|p| p[c]).collect();
        let mut state = ConsensusState::new(dg.mirrored_initial(&coord, v));
        for (k, snapshot) in out.iter_mut().enumerate() {
            if k > 0 {
                state = consensus_step(&state, &dg.inherited, &params)?;
            }
            for (i, row) in snapshot.iter_mut().enumerate() {
                row[c] = state.x[i] + v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{line_graph, random_connected_graph};
    use crate::rng::SeededRng;

    fn scalars(v: &[f64]) -> Points {
        v.iter().map(|&e| vec![e]).collect()
    }

    #[test]
    fn empty_leader_set_rejected() {
        assert!(matches!(
            LeaderConfig::new(3, &[], vec![0.0], 3.0),
            Err(Error::Config(_))
        ));
        assert!(LeaderConfig::new(3, &[3], vec![0.0], 3.0).is_err());
    }

    #[test]
    fn all_at_value_is_fixed() {
        let g = line_graph(5).unwrap();
        let cfg = LeaderConfig::new(5, &[2], vec![1.5, -0.5], 5.0).unwrap();
        let x1 = vec![vec![1.5, -0.5]; 5];
        let s = LeaderState::new(&x1, &cfg).unwrap();
        let next = leader_step(&s, &g, &cfg).unwrap();
        assert_eq!(next.x, s.x);
        let run = run_leader_follow(&g, &cfg, &x1, 1e-6, 10).unwrap();
        assert_eq!(run.report.rounds, 1);
    }

    #[test]
    fn two_node_step_by_hand() {
        let g = line_graph(2).unwrap();
        let cfg = LeaderConfig::new(2, &[0], vec![0.0], 2.0).unwrap();
        assert!((cfg.momentum().unwrap() - 35.0 / 37.0).abs() < 1e-15);
        let s = LeaderState::new(&scalars(&[0.0, 1.0]), &cfg).unwrap();
        let next = leader_step(&s, &g, &cfg).unwrap();
        assert_eq!(next.x[0][0], 0.0);
        assert!((next.y[1][0] - 0.5).abs() < 1e-15);
        assert!((next.x[1][0] - (0.5 - 17.5 / 37.0)).abs() < 1e-15);
    }

    #[test]
    fn doubled_two_node_path_is_a_star() {
        let g = line_graph(2).unwrap();
        let cfg = LeaderConfig::new(2, &[0], vec![0.0], 2.0).unwrap();
        let dg = doubled_graph(&g, &cfg).unwrap();
        assert_eq!(dg.graph.node_count(), 3);
        assert_eq!(dg.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
        assert_eq!(dg.mirror, vec![None, Some(2)]);
    }

    #[test]
    fn all_leaders_leave_the_graph_alone() {
        let g = random_connected_graph(8, 0.3, 1).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let cfg = LeaderConfig::new(8, &all, vec![0.0], 8.0).unwrap();
        let dg = doubled_graph(&g, &cfg).unwrap();
        assert_eq!(dg.graph, g);
    }

    #[test]
    fn follower_copies_keep_their_degree() {
        for seed in 0..10 {
            let g = random_connected_graph(15, 0.2, seed).unwrap();
            let cfg = LeaderConfig::new(15, &[0, 7], vec![0.0], 15.0).unwrap();
            let dg = doubled_graph(&g, &cfg).unwrap();
            assert!(dg.graph.is_connected());
            assert_eq!(dg.graph.node_count(), 2 * 13 + 2);
            for i in 0..15 {
                if let Some(b) = dg.mirror[i] {
                    assert_eq!(dg.graph.degree(i), g.degree(i));
                    assert_eq!(dg.graph.degree(b), g.degree(i));
                }
            }
        }
    }

    #[test]
    fn doubled_consensus_reproduces_leader_dynamics() {
        let mut rng = SeededRng::new(77);
        for seed in 0..5 {
            let n = 6 + seed as usize;
            let g = random_connected_graph(n, 0.3, seed).unwrap();
            let cfg = LeaderConfig::new(n, &[rng.below(n)], vec![0.7, -0.2], n as f64).unwrap();
            let x1: Points = (0..n)
                .map(|_| vec![rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)])
                .collect();
            let direct = leader_trajectory(&g, &cfg, &x1, 200).unwrap();
            let mirrored = doubled_graph_trajectory(&g, &cfg, &x1, 200).unwrap();
            for (a, b) in direct.iter().zip(&mirrored) {
                assert!(sq_dist_pts(a, b).sqrt() < 1e-10);
            }
        }
    }

    fn sq_dist_pts(a: &Points, b: &Points) -> f64 {
        super::super::sq_dist(a, b)
    }

    #[test]
    fn doubled_graph_own_weights_do_not_reproduce_leaders() {
        // In the doubled 2-node path the leader has degree 2, so its own
        // Metropolis weight to each copy is 1/2 rather than the original 1.
        let g = line_graph(2).unwrap();
        let cfg = LeaderConfig::new(2, &[0], vec![0.0], 2.0).unwrap();
        let dg = doubled_graph(&g, &cfg).unwrap();
        let native = NeighborWeights::metropolis(&dg.graph).unwrap();
        let params = MomentumParams::default_schedule(4.0).unwrap();
        let state = ConsensusState::new(dg.mirrored_initial(&[0.0, 1.0], 0.0));
        let native_next = consensus_step(&state, &native, &params).unwrap();
        let direct = leader_trajectory(&g, &cfg, &scalars(&[0.0, 1.0]), 2).unwrap();
        assert!((native_next.x[1] - direct[1][1][0]).abs() > 0.1);
    }

    #[test]
    fn line_of_ten_follows_under_the_bound() {
        let g = line_graph(10).unwrap();
        let cfg = LeaderConfig::new(10, &[0], vec![0.0], 10.0).unwrap();
        let mut x1 = vec![vec![1.0]; 10];
        x1[0][0] = 0.0;
        let run = run_leader_follow(&g, &cfg, &x1, 1e-3, 1_000_000).unwrap();
        assert!(run.report.converged);
        assert!(run.report.worst_bound_excess() <= 1e-9);
    }
}
