//! Cosine similarity and the exact k-nearest-neighbor similarity graph.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::types::FeatureStore;

/// Cosine similarity of two vectors, in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
            context: "cosine similarity",
        });
    }
    let na = libm::sqrt(dot(a, a));
    let nb = libm::sqrt(dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNormVector { item: None });
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Per-item neighbor lists sorted by descending cosine similarity.
///
/// `k == 0` means the graph is dense: every other item is a neighbor.
/// There are no self-edges. Ties in similarity break toward the lower
/// item index, so construction is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    num_items: usize,
    k: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SimilarityGraph {
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbors of `item`: (neighbor index, similarity), best first.
    pub fn neighbors(&self, item: usize) -> &[(usize, f64)] {
        &self.neighbors[item]
    }

    /// Total number of directed edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Iterates all directed edges as (item, neighbor, similarity).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(f, list)| list.iter().map(move |&(g, s)| (f, g, s)))
    }
}

/// Builds the exact k-NN similarity graph over all items of `features`.
///
/// Fails on the first zero-norm row, naming the offending item.
pub fn build_similarity_graph(features: &FeatureStore, k: usize) -> Result<SimilarityGraph> {
    let n = features.num_items();
    for item in 0..n {
        if features.is_zero_norm(item) {
            return Err(Error::ZeroNormVector { item: Some(item) });
        }
    }

    let mut neighbors = Vec::with_capacity(n);
    for f in 0..n {
        let vf = features.vector(f);
        let nf = features.norm(f);
        let mut list: Vec<(usize, f64)> = (0..n)
            .filter(|&g| g != f)
            .map(|g| {
                let s = dot(vf, features.vector(g)) / (nf * features.norm(g));
                (g, s.clamp(-1.0, 1.0))
            })
            .collect();
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if k > 0 {
            list.truncate(k.min(n.saturating_sub(1)));
        }
        neighbors.push(list);
    }
    Ok(SimilarityGraph { num_items: n, k, neighbors })
}
