use crate::error::{Error, Result};
use crate::rng::SeededRng;

use super::Graph;

/// Path `0 - 1 - ... - (n-1)`.
pub fn line_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "line graph needs n >= 2, got {n}"
        )));
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges)
}

/// Clique on the first `n/2` nodes, path on the remaining `n/2`, joined by
/// the bridge `(n/2 - 1, n/2)`.
pub fn lollipop_graph(n: usize) -> Result<Graph> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidSize(format!(
            "lollipop graph needs even n >= 4, got {n}"
        )));
    }
    let half = n / 2;
    let mut edges = Vec::with_capacity(half * (half - 1) / 2 + half);
    for i in 0..half {
        for j in (i + 1)..half {
            edges.push((i, j));
        }
    }
    for i in half..n {
        edges.push((i - 1, i));
    }
    Graph::from_edges(n, &edges)
}

/// `k x k` grid; node `(i, j)` (1-based row and column) sits at index
/// `(i - 1) * k + (j - 1)`.
pub fn grid_2d(k: usize) -> Result<Graph> {
    if k < 2 {
        return Err(Error::InvalidSize(format!("grid needs k >= 2, got {k}")));
    }
    let mut edges = Vec::with_capacity(2 * k * (k - 1));
    for r in 0..k {
        for c in 0..k {
            let idx = r * k + c;
            if c + 1 < k {
                edges.push((idx, idx + 1));
            }
            if r + 1 < k {
                edges.push((idx, idx + k));
            }
        }
    }
    Graph::from_edges(k * k, &edges)
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Star with center 0 and leaves `1..n`.
pub fn star_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "star graph needs n >= 2, got {n}"
        )));
    }
    let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
    Graph::from_edges(n, &edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    pub graph: Graph,
    pub coords: Vec<[f64; 2]>,
}

/// Random geometric graph: `n` points uniform on the unit square, joined when
/// their Euclidean distance is at most `r`. Disconnected draws are returned
/// as-is; check [`Graph::is_connected`].
pub fn geometric_random_graph(n: usize, r: f64, seed: u64) -> Result<GeometricGraph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "geometric graph needs n >= 2, got {n}"
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "connectivity radius must be positive, got {r}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.uniform(), rng.uniform()]).collect();
    let r2 = r * r;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            if dx * dx + dy * dy <= r2 {
                edges.push((i, j));
            }
        }
    }
    Ok(GeometricGraph {
        graph: Graph::from_edges(n, &edges)?,
        coords,
    })
}

/// Random connected graph: a uniformly random recursive tree over a shuffled
/// node order, plus every remaining pair independently with probability `p`.
pub fn random_connected_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "random graph needs n >= 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((order[rng.below(k)], order[k]));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_list(g: &Graph) -> Vec<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn line_examples() {
        assert_eq!(edge_list(&line_graph(2).unwrap()), vec![(0, 1)]);
        assert_eq!(
            edge_list(&line_graph(4).unwrap()),
            vec![(0, 1), (1, 2), (2, 3)]
        );
        assert!(matches!(line_graph(1), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn lollipop_examples() {
        assert_eq!(
            edge_list(&lollipop_graph(4).unwrap()),
            vec![(0, 1), (1, 2), (2, 3)]
        );
        // Enumerated by hand: clique {0,1,2}, bridge (2,3), path 3-4-5.
        let g6 = lollipop_graph(6).unwrap();
        assert_eq!(
            edge_list(&g6),
            vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5)]
        );
        for n in (4..=40).step_by(2) {
            let h = n / 2;
            assert_eq!(lollipop_graph(n).unwrap().edge_count(), h * (h - 1) / 2 + h);
        }
        assert!(matches!(lollipop_graph(5), Err(Error::InvalidSize(_))));
        assert!(matches!(lollipop_graph(2), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn grid_examples() {
        let g2 = grid_2d(2).unwrap();
        assert_eq!(g2.edge_count(), 4);
        assert!((0..4).all(|i| g2.degree(i) == 2));

        let g3 = grid_2d(3).unwrap();
        assert_eq!(g3.node_count(), 9);
        // Brute force over all pairs using the Manhattan-distance rule.
        let mut count = 0;
        for a in 0..9usize {
            for b in (a + 1)..9 {
                let (ra, ca) = (a / 3, a % 3);
                let (rb, cb) = (b / 3, b % 3);
                let adjacent = ra.abs_diff(rb) + ca.abs_diff(cb) == 1;
                assert_eq!(adjacent, g3.has_edge(a, b));
                count += adjacent as usize;
            }
        }
        assert_eq!(count, 12);
        assert!(grid_2d(1).is_err());
    }

    #[test]
    fn geometric_examples() {
        let g = geometric_random_graph(2, 2f64.sqrt(), 99).unwrap();
        assert_eq!(edge_list(&g.graph), vec![(0, 1)]);
        assert!(matches!(
            geometric_random_graph(2, 0.0, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn geometric_is_reproducible() {
        let a = geometric_random_graph(60, 0.2, 42).unwrap();
        let b = geometric_random_graph(60, 0.2, 42).unwrap();
        assert_eq!(a, b);
        let c = geometric_random_graph(60, 0.2, 43).unwrap();
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn geometric_connectivity_at_threshold_n100() {
        let n = 100usize;
        let r = (16.0 * (n as f64).ln() / n as f64).sqrt();
        let connected = (0..50u64)
            .filter(|&s| {
                geometric_random_graph(n, r, s)
                    .unwrap()
                    .graph
                    .is_connected()
            })
            .count();
        assert!(connected >= 48, "{connected}/50 connected");
    }

    #[test]
    fn random_connected_is_connected() {
        for seed in 0..30 {
            let g = random_connected_graph(2 + seed as usize, 0.1, seed).unwrap();
            assert!(g.is_connected());
        }
    }
}
