//! Informative-layer graph: an open-boundary square lattice with
//! small-world rewiring.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph over agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyList {
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyList {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        AdjacencyList { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` pairs with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j")?;
        for (i, j) in self.edges() {
            writeln!(w, "{i},{j}")?;
        }
        Ok(())
    }
}

fn lattice_edges(side: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            if c + 1 < side {
                edges.push((i, i + 1));
            }
            if r + 1 < side {
                edges.push((i, i + side));
            }
        }
    }
    edges
}

/// Draws tried per edge when looking for a new endpoint.
const REWIRE_ATTEMPTS: usize = 64;

/// Builds the `side × side` open-boundary lattice and rewires each edge with
/// probability `rewiring_prob` by moving one endpoint to a uniformly chosen
/// non-adjacent node. Moves that would create a self-loop, a duplicate edge or
/// an isolated node are rejected, so the edge count never changes.
pub fn build_small_world<R: Rng + ?Sized>(
    side: usize,
    rewiring_prob: f64,
    rng: &mut R,
) -> Result<AdjacencyList> {
    if side < 2 {
        return Err(Error::config("side", "must be at least 2"));
    }
    if !(0.0..=1.0).contains(&rewiring_prob) {
        return Err(Error::config("rewiring_prob", "must lie in [0, 1]"));
    }
    let n = side * side;
    let mut edges = lattice_edges(side);
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(4); n];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    if rewiring_prob == 0.0 {
        return Ok(AdjacencyList::from_edges(n, &edges));
    }

    for edge in edges.iter_mut() {
        if !rng.random_bool(rewiring_prob) {
            continue;
        }
        let (a, b) = *edge;
        // Keep one endpoint, detach the other.
        let (keep, drop) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
        if adj[drop].len() < 2 {
            continue;
        }
        let target = (0..REWIRE_ATTEMPTS)
            .map(|_| rng.random_range(0..n))
            .find(|&w| w != keep && !adj[keep].contains(&w));
        let Some(w) = target else { continue };

        adj[drop].retain(|&x| x != keep);
        adj[keep].retain(|&x| x != drop);
        adj[keep].push(w);
        adj[w].push(keep);
        *edge = (keep.min(w), keep.max(w));
    }
    Ok(AdjacencyList::from_edges(n, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    fn check_invariants(g: &AdjacencyList, side: usize) {
        let n = side * side;
        assert_eq!(g.len(), n);
        assert_eq!(g.edge_count(), 2 * side * (side - 1));
        for i in 0..n {
            let nb = g.neighbors(i);
            assert!(!nb.is_empty(), "node {i} isolated");
            assert!(!nb.contains(&i), "self loop at {i}");
            assert!(nb.windows(2).all(|w| w[0] < w[1]), "duplicate edge at {i}");
            for &j in nb {
                assert!(g.neighbors(j).contains(&i), "asymmetric {i}-{j}");
            }
        }
    }

    #[test]
    fn three_by_three_lattice() {
        let g = build_small_world(3, 0.0, &mut substream(1, Stream::Topology)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.edge_count(), 12);
        for corner in [0, 2, 6, 8] {
            assert_eq!(g.degree(corner), 2);
        }
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.degree(1), 3);
        check_invariants(&g, 3);
    }

    #[test]
    fn two_by_two_lattice() {
        let g = build_small_world(2, 0.0, &mut substream(1, Stream::Topology)).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!((0..4).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn reference_size_keeps_edge_count() {
        let g = build_small_world(30, 0.1, &mut substream(11, Stream::Topology)).unwrap();
        assert_eq!(g.len(), 900);
        assert_eq!(g.edge_count(), 1740);
        check_invariants(&g, 30);
        // Some edges actually moved.
        let lattice = AdjacencyList::from_edges(900, &lattice_edges(30));
        assert_ne!(g, lattice);
    }

    #[test]
    fn side_one_rejected() {
        let err = build_small_world(1, 0.1, &mut substream(1, Stream::Topology)).unwrap_err();
        assert_eq!(err.key(), Some("side"));
    }

    #[test]
    fn edge_csv_format() {
        let g = build_small_world(2, 0.0, &mut substream(1, Stream::Topology)).unwrap();
        let mut buf = Vec::new();
        g.write_edge_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,j\n0,1\n0,2\n1,3\n2,3\n");
    }

    proptest! {
        #[test]
        fn invariants_hold_for_any_seed(seed in any::<u64>(), side in 2usize..12, p in 0.0f64..=1.0) {
            let g = build_small_world(side, p, &mut substream(seed, Stream::Topology)).unwrap();
            check_invariants(&g, side);
        }

        #[test]
        fn zero_rewiring_ignores_seed(seed in any::<u64>(), side in 2usize..10) {
            let g = build_small_world(side, 0.0, &mut substream(seed, Stream::Topology)).unwrap();
            prop_assert_eq!(g, AdjacencyList::from_edges(side * side, &lattice_edges(side)));
        }

        #[test]
        fn deterministic_given_seed(seed in any::<u64>()) {
            let a = build_small_world(8, 0.3, &mut substream(seed, Stream::Topology)).unwrap();
            let b = build_small_world(8, 0.3, &mut substream(seed, Stream::Topology)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
