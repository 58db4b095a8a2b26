use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::consensus::{ConvergenceReport, MomentumParams};
use crate::error::{Error, Result};
use crate::graphs::{bfs_tree, Graph, NeighborWeights};

use super::{sq_dist, Points};

const CONSISTENCY_TOL: f64 = 1e-9;

/// Desired relative offsets `r_ij = p_j - p_i` in `R^d`, stored for both
/// orientations of each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationSpec {
    dim: usize,
    offsets: BTreeMap<(usize, usize), Vec<f64>>,
}

impl FormationSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "formation dimension must be >= 1".into(),
            ));
        }
        Ok(FormationSpec {
            dim,
            offsets: BTreeMap::new(),
        })
    }

    /// Sets `r_ij` and its reverse `r_ji = -r_ij`.
    pub fn insert(&mut self, i: usize, j: usize, offset: &[f64]) -> Result<()> {
        self.check_len(offset)?;
        if i == j {
            return Err(Error::MalformedSpec(format!("self offset at node {i}")));
        }
        self.offsets.insert((i, j), offset.to_vec());
        self.offsets
            .insert((j, i), offset.iter().map(|v| -v).collect());
        Ok(())
    }

    /// Stores one orientation only; antisymmetry is checked at validation.
    pub fn insert_directed(&mut self, i: usize, j: usize, offset: &[f64]) -> Result<()> {
        self.check_len(offset)?;
        self.offsets.insert((i, j), offset.to_vec());
        Ok(())
    }

    /// Offsets realized by `positions` on every edge of `g`.
    pub fn from_positions(g: &Graph, positions: &[Vec<f64>]) -> Result<Self> {
        let dim = positions.first().map_or(0, Vec::len);
        let mut spec = FormationSpec::new(dim)?;
        if positions.len() != g.node_count() {
            return Err(Error::Shape {
                expected: g.node_count(),
                got: positions.len(),
            });
        }
        for (i, j) in g.edges() {
            let r: Vec<f64> = positions[j]
                .iter()
                .zip(&positions[i])
                .map(|(a, b)| a - b)
                .collect();
            spec.insert(i, j, &r)?;
        }
        Ok(spec)
    }

    fn check_len(&self, offset: &[f64]) -> Result<()> {
        if offset.len() != self.dim {
            return Err(Error::MalformedSpec(format!(
                "offset has {} coordinates, formation dimension is {}",
                offset.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.offsets.get(&(i, j)).map(Vec::as_slice)
    }
}

/// Reads lines `i j r_1 ... r_d` with 1-based node ids. Blank lines and `#`
/// comments are skipped. Each line also sets the reverse orientation.
pub fn read_formation<R: BufRead>(input: R) -> Result<FormationSpec> {
    let mut spec: Option<FormationSpec> = None;
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected `i j r_1 ... r_d`".into(),
            });
        }
        let node = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::Parse {
                    line: line_no,
                    msg: format!("bad node id {s:?}"),
                }),
            }
        };
        let (i, j) = (node(fields[0])?, node(fields[1])?);
        let offset = fields[2..]
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad coordinate {s:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let spec = match &mut spec {
            Some(s) => s,
            None => spec.insert(FormationSpec::new(offset.len())?),
        };
        spec.insert(i, j, &offset).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
    }
    spec.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "formation file has no offsets".into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormationVerdict {
    Valid,
    /// Integration along the spanning tree disagrees with this non-tree edge.
    Invalid {
        edge: (usize, usize),
    },
}

impl FormationVerdict {
    pub fn is_valid(&self) -> bool {
        *self == FormationVerdict::Valid
    }
}

fn check_complete(g: &Graph, spec: &FormationSpec) -> Result<()> {
    for (i, j) in g.edges() {
        let forward = spec.offset(i, j).ok_or(Error::IncompleteSpec(i, j))?;
        let backward = spec.offset(j, i).ok_or(Error::IncompleteSpec(j, i))?;
        if forward.iter().zip(backward).any(|(a, b)| *a != -*b) {
            return Err(Error::MalformedSpec(format!(
                "offsets on edge ({i}, {j}) are not negatives of each other"
            )));
        }
    }
    Ok(())
}

/// Positions `q` with `q_root = 0`, integrated along a breadth-first tree.
fn integrate(g: &Graph, spec: &FormationSpec, root: usize) -> (Points, Vec<Option<usize>>) {
    let (parent, order) = bfs_tree(g, root);
    let mut q = vec![vec![0.0; spec.dim()]; g.node_count()];
    for &j in &order {
        if let Some(i) = parent[j] {
            let r = spec.offset(i, j).expect("checked complete");
            q[j] = q[i].iter().zip(r).map(|(a, b)| a + b).collect();
        }
    }
    (q, parent)
}

fn verdict_for(
    g: &Graph,
    spec: &FormationSpec,
    q: &Points,
    parent: &[Option<usize>],
) -> FormationVerdict {
    for (i, j) in g.edges() {
        if parent[j] == Some(i) || parent[i] == Some(j) {
            continue;
        }
        let r = spec.offset(i, j).expect("checked complete");
        let off = q[j]
            .iter()
            .zip(&q[i])
            .zip(r)
            .any(|((a, b), c)| (a - b - c).abs() > CONSISTENCY_TOL);
        if off {
            return FormationVerdict::Invalid { edge: (i, j) };
        }
    }
    FormationVerdict::Valid
}

/// Cycle-consistency check: integrate offsets along a breadth-first tree
/// from node 0, then test every remaining edge.
pub fn validate_formation(g: &Graph, spec: &FormationSpec) -> Result<FormationVerdict> {
    g.require_connected()?;
    check_complete(g, spec)?;
    let (q, parent) = integrate(g, spec, 0);
    Ok(verdict_for(g, spec, &q, &parent))
}

fn check_points(n: usize, dim: usize, pts: &[Vec<f64>]) -> Result<()> {
    if pts.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: pts.len(),
        });
    }
    if let Some(bad) = pts.iter().find(|p| p.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(())
}

fn centroid(pts: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for p in pts {
        for (a, b) in c.iter_mut().zip(p) {
            *a += b;
        }
    }
    let n = pts.len() as f64;
    c.iter_mut().for_each(|a| *a /= n);
    c
}

/// The unique in-formation configuration sharing the centroid of `p1`.
pub fn target_formation(g: &Graph, spec: &FormationSpec, p1: &[Vec<f64>]) -> Result<Points> {
    target_formation_anchored(g, spec, p1, 0)
}

/// [`target_formation`] with the tree integration rooted at `anchor`.
pub fn target_formation_anchored(
    g: &Graph,
    spec: &FormationSpec,
    p1: &[Vec<f64>],
    anchor: usize,
) -> Result<Points> {
    g.require_connected()?;
    check_complete(g, spec)?;
    check_points(g.node_count(), spec.dim(), p1)?;
    if anchor >= g.node_count() {
        return Err(Error::InvalidParameter(format!(
            "anchor {anchor} out of range"
        )));
    }
    let (q, parent) = integrate(g, spec, anchor);
    if let FormationVerdict::Invalid { edge } = verdict_for(g, spec, &q, &parent) {
        return Err(Error::FormationInvalid(edge.0, edge.1));
    }
    let dim = spec.dim();
    let cp = centroid(p1, dim);
    let cq = centroid(&q, dim);
    Ok(q.into_iter()
        .map(|qi| {
            qi.iter()
                .zip(cp.iter().zip(&cq))
                .map(|(a, (b, c))| a + (b - c))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPositions {
    pub p: Points,
    pub y: Points,
    pub t: usize,
}

impl AgentPositions {
    pub fn new(p1: Points) -> Self {
        AgentPositions {
            y: p1.clone(),
            p: p1,
            t: 1,
        }
    }
}

/// Per-node neighbor lists `(j, w_ij, r_ij)` shared by every round.
struct OffsetWeights {
    rows: Vec<Vec<(usize, f64, Vec<f64>)>>,
}

impl OffsetWeights {
    fn new(g: &Graph, spec: &FormationSpec) -> Result<Self> {
        check_complete(g, spec)?;
        let w = NeighborWeights::metropolis(g)?;
        let rows = (0..g.node_count())
            .map(|i| {
                w.row(i)
                    .iter()
                    .map(|&(j, wij)| (j, wij, spec.offset(i, j).expect("checked").to_vec()))
                    .collect()
            })
            .collect();
        Ok(OffsetWeights { rows })
    }

    fn step(&self, s: &AgentPositions, momentum: f64) -> AgentPositions {
        let y: Points = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let pi = &s.p[i];
                (0..pi.len())
                    .map(|c| {
                        let pull: f64 = row
                            .iter()
                            .map(|(j, w, r)| w * (s.p[*j][c] - pi[c] - r[c]))
                            .sum();
                        pi[c] + 0.5 * pull
                    })
                    .collect()
            })
            .collect();
        let p = y
            .iter()
            .zip(&s.y)
            .map(|(yn, yo)| {
                yn.iter()
                    .zip(yo)
                    .map(|(a, b)| a + momentum * (a - b))
                    .collect()
            })
            .collect();
        AgentPositions { p, y, t: s.t + 1 }
    }
}

/// One round of the offset-driven update, coordinate by coordinate.
pub fn formation_step(
    s: &AgentPositions,
    g: &Graph,
    spec: &FormationSpec,
    p: &MomentumParams,
) -> Result<AgentPositions> {
    check_points(g.node_count(), spec.dim(), &s.p)?;
    check_points(g.node_count(), spec.dim(), &s.y)?;
    Ok(OffsetWeights::new(g, spec)?.step(s, p.momentum()))
}

#[derive(Debug, Clone)]
pub struct FormationRun {
    /// `l2sq_dev` holds `sum_i |y_i(t) - target_i|^2`.
    pub report: ConvergenceReport,
    pub target: Points,
    pub final_state: AgentPositions,
    /// `p(1), ..., p(rounds)` when requested.
    pub trajectory: Option<Vec<Points>>,
}

/// Iterates until `sum_i |y_i(t) - target_i|^2 < eps^2`, recording the
/// geometric bound `2 (1 - 1/(9U))^(t-1)` times the initial distance.
pub fn run_formation(
    g: &Graph,
    spec: &FormationSpec,
    p1: &[Vec<f64>],
    u: f64,
    eps: f64,
    max_iter: usize,
) -> Result<FormationRun> {
    run_formation_impl(g, spec, p1, u, eps, max_iter, false)
}

/// [`run_formation`] that also keeps every round's positions.
pub fn run_formation_traced(
    g: &Graph,
    spec: &FormationSpec,
    p1: &[Vec<f64>],
    u: f64,
    eps: f64,
    max_iter: usize,
) -> Result<FormationRun> {
    run_formation_impl(g, spec, p1, u, eps, max_iter, true)
}

fn run_formation_impl(
    g: &Graph,
    spec: &FormationSpec,
    p1: &[Vec<f64>],
    u: f64,
    eps: f64,
    max_iter: usize,
    keep: bool,
) -> Result<FormationRun> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let params = MomentumParams::default_schedule(u)?;
    let target = target_formation(g, spec, p1)?;
    let weights = OffsetWeights::new(g, spec)?;
    let mut state = AgentPositions::new(p1.to_vec());
    let initial = sq_dist(&state.y, &target);
    let mut trajectory = keep.then(Vec::new);
    let mut report = ConvergenceReport {
        rounds: max_iter,
        converged: false,
        l2sq_dev: Vec::new(),
        linf_dev: Vec::new(),
        bound: Vec::new(),
    };
    loop {
        let dev = sq_dist(&state.y, &target);
        report.l2sq_dev.push(dev);
        report.linf_dev.push(super::max_abs_dev(&state.y, &target));
        report
            .bound
            .push(2.0 * params.eta.powi(state.t as i32 - 1) * initial);
        if let Some(traj) = trajectory.as_mut() {
            traj.push(state.p.clone());
        }
        if dev < eps * eps {
            report.rounds = state.t;
            report.converged = true;
            break;
        }
        if state.t >= max_iter {
            break;
        }
        state = weights.step(&state, params.momentum());
    }
    Ok(FormationRun {
        report,
        target,
        final_state: state,
        trajectory,
    })
}

/// Writes `t,node,coord_1,...,coord_d`, one row per node per round.
pub fn write_trajectory_csv<W: Write>(trajectory: &[Points], mut out: W) -> std::io::Result<()> {
    let dim = trajectory
        .first()
        .and_then(|p| p.first())
        .map_or(0, Vec::len);
    write!(out, "t,node")?;
    for c in 1..=dim {
        write!(out, ",coord_{c}")?;
    }
    writeln!(out)?;
    for (k, pts) in trajectory.iter().enumerate() {
        for (node, p) in pts.iter().enumerate() {
            write!(out, "{},{}", k + 1, node + 1)?;
            for v in p {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
