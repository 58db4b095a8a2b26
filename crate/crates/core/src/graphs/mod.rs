//! Undirected graph topologies used by every protocol in the crate.
//!
//! Nodes are indexed from 0 internally. The edge-list text format in [`io`]
//! is 1-based.

mod generators;
pub mod io;
mod metropolis;
mod spectral;

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub use generators::{
    complete_graph, geometric_random_graph, grid_2d, line_graph, lollipop_graph,
    random_connected_graph, star_graph, GeometricGraph,
};
pub use metropolis::{lazy_metropolis, metropolis, NeighborWeights, StochasticMatrix};
pub use spectral::{spectral_report, symmetric_eigen, SpectralReport, SymmetricEigen};

/// Undirected simple graph with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    connected: bool,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge list. Duplicate edges (in
    /// either orientation) collapse to one; self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let connected = reachable_from_zero(&neighbors) == n;
        Ok(Graph {
            neighbors,
            connected,
        })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Connectivity recorded at construction time.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Edges with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }
}

/// Breadth-first reachability from node 0 covers every node.
pub fn is_connected(g: &Graph) -> bool {
    reachable_from_zero(&g.neighbors) == g.node_count()
}

fn reachable_from_zero(neighbors: &[Vec<usize>]) -> usize {
    if neighbors.is_empty() {
        return 0;
    }
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count
}

/// Breadth-first spanning tree rooted at `root`: `(parent, order)` where
/// `order` lists nodes in visit order and `parent[root]` is `None`.
pub(crate) fn bfs_tree(g: &Graph, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
    let n = g.node_count();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                parent[j] = Some(i);
                queue.push_back(j);
            }
        }
    }
    (parent, order)
}
