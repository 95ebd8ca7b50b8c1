//! Communication topology and Metropolis diffusion weights.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::numerics::{support_is_primitive, Matrix};

/// Directed communication graph on nodes `0..n`.
///
/// An edge `(i, j)` means node `j` can transmit to node `i`. Nodes are
/// implicitly their own in- and out-neighbors; self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    // in_lists[i] = sorted senders j != i
    in_lists: Vec<Vec<usize>>,
    out_lists: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|&(i, j)| {
                assert!(i < n && j < n, "edge ({i}, {j}) out of range for {n} nodes");
                i != j
            })
            .collect();
        let mut in_lists = vec![Vec::new(); n];
        let mut out_lists = vec![Vec::new(); n];
        for &(i, j) in &edges {
            in_lists[i].push(j);
            out_lists[j].push(i);
        }
        for l in out_lists.iter_mut() {
            l.sort_unstable();
        }
        Self {
            n,
            edges,
            in_lists,
            out_lists,
        }
    }

    /// Bidirectional links between every pair within `comm_range` meters.
    pub fn from_positions(positions: &[[f64; 3]], comm_range: f64) -> Self {
        let n = positions.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d: f64 = (0..3).map(|k| (positions[i][k] - positions[j][k]).powi(2)).sum::<f64>().sqrt();
                if d <= comm_range {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    /// Builds from per-node lists of in-neighbors (self entries ignored).
    pub fn from_adjacency(lists: &[Vec<usize>]) -> Self {
        let n = lists.len();
        Self::from_edges(
            n,
            lists
                .iter()
                .enumerate()
                .flat_map(|(i, l)| l.iter().map(move |&j| (i, j))),
        )
    }

    /// Per-node in-neighbor lists without self, as stored in scenario files.
    pub fn to_adjacency(&self) -> Vec<Vec<usize>> {
        self.in_lists.clone()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    /// `{j : j → i} ∪ {i}`, sorted.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        with_self(&self.in_lists[i], i)
    }

    /// `{j : i → j} ∪ {i}`, sorted.
    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        with_self(&self.out_lists[i], i)
    }

    /// In-neighbors excluding `i`.
    pub fn senders_to(&self, i: usize) -> &[usize] {
        &self.in_lists[i]
    }

    /// Out-neighbors excluding `i`.
    pub fn receivers_from(&self, i: usize) -> &[usize] {
        &self.out_lists[i]
    }

    /// `|in_neighbors(i)|`.
    pub fn in_degree_with_self(&self, i: usize) -> usize {
        self.in_lists[i].len() + 1
    }

    /// Whether the undirected version of the graph is connected.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in self.in_lists[v].iter().chain(self.out_lists[v].iter()) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn with_self(list: &[usize], i: usize) -> Vec<usize> {
    let mut v: Vec<usize> = list.to_vec();
    let pos = v.partition_point(|&j| j < i);
    v.insert(pos, i);
    v
}

/// Row-stochastic weight matrix used to combine neighbor estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMatrix(pub Matrix);

impl DiffusionMatrix {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Metropolis weights with link failures.
///
/// `delivered(j, i)` reports whether node `j`'s estimate reached node `i` in
/// the diffusion round. Off-diagonal `C(i, j) = γ / max(|N_i|, |N_j|)`; the
/// diagonal absorbs the rest of the row.
pub fn metropolis_weights(g: &Graph, delivered: impl Fn(usize, usize) -> bool) -> DiffusionMatrix {
    let n = g.len();
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        let di = g.in_degree_with_self(i);
        let mut off = 0.0;
        for &j in g.senders_to(i) {
            if delivered(j, i) {
                let w = 1.0 / di.max(g.in_degree_with_self(j)) as f64;
                c[(i, j)] = w;
                off += w;
            }
        }
        c[(i, i)] = 1.0 - off;
    }
    DiffusionMatrix(c)
}

/// Irreducibility (hence primitivity, given a positive diagonal) of `C`.
pub fn check_primitivity(c: &DiffusionMatrix) -> bool {
    support_is_primitive(&c.0)
}
