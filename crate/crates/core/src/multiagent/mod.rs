//! Formation maintenance from relative offsets and leader following, both
//! driven by the accelerated lazy Metropolis update.

mod formation;
mod leader;

pub use formation::{
    formation_step, read_formation, run_formation, run_formation_traced, target_formation,
    target_formation_anchored, validate_formation, write_trajectory_csv, AgentPositions,
    FormationRun, FormationSpec, FormationVerdict,
};
pub use leader::{
    doubled_graph, doubled_graph_trajectory, leader_step, leader_trajectory, run_leader_follow,
    DoubledGraph, LeaderConfig, LeaderRun, LeaderState,
};

/// One point in `R^d` per node.
pub type Points = Vec<Vec<f64>>;

pub(crate) fn sq_dist(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v) * (u - v)))
        .sum()
}

pub(crate) fn max_abs_dev(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

pub(crate) fn sq_dist_to(a: &[Vec<f64>], v: &[f64]) -> f64 {
    a.iter()
        .flat_map(|p| p.iter().zip(v).map(|(u, w)| (u - w) * (u - w)))
        .sum()
}

pub(crate) fn max_abs_dev_to(a: &[Vec<f64>], v: &[f64]) -> f64 {
    a.iter()
        .flat_map(|p| p.iter().zip(v).map(|(u, w)| (u - w).abs()))
        .fold(0.0, f64::max)
}
