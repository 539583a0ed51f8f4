//! Overlap-graph construction and component measurements.

use super::UnionFind;
use crate::datagen::{overlap_l2_sym, SampleRecord};
use crate::{Error, Result};
use rayon::prelude::*;

/// Undirected overlap graph over dataset records. An edge joins records whose
/// symmetrized overlap reaches the threshold.
#[derive(Debug, Clone)]
pub struct OverlapGraph {
    pub node_count: usize,
    /// Edges as (i, j) with i < j.
    pub edges: Vec<(u32, u32)>,
    pub theta: f64,
}

/// Center distance beyond which two bumps provably overlap below any
/// threshold >= 1e-6; pairs farther apart are never tested.
pub fn prune_radius(sigma_x: f64, sigma_y: f64) -> f64 {
    8.0 * sigma_x.max(sigma_y) + 2.0
}

/// Builds the overlap graph without pruning (every pair tested).
pub fn build_graph(records: &[SampleRecord], theta: f64) -> Result<OverlapGraph> {
    build_graph_pruned(records, theta, f64::INFINITY)
}

/// Builds the overlap graph, skipping pairs whose centers are farther apart
/// than `radius` (see [`prune_radius`]). Blank records (possible at sub-pixel
/// spreads) never gain edges: the overlap is zero in the direction normalized
/// by the non-blank image and undefined in the other.
pub fn build_graph_pruned(
    records: &[SampleRecord],
    theta: f64,
    radius: f64,
) -> Result<OverlapGraph> {
    if theta <= 0.0 {
        return Err(Error::InvalidFraction(theta));
    }
    let r2 = radius * radius;
    let edges: Vec<(u32, u32)> = (0..records.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let records = &records;
            (i + 1..records.len()).filter_map(move |j| {
                let dx = records[i].mu_x - records[j].mu_x;
                let dy = records[i].mu_y - records[j].mu_y;
                if dx * dx + dy * dy > r2 {
                    return None;
                }
                match overlap_l2_sym::<f64>(&records[i].image, &records[j].image) {
                    Ok(o) if o >= theta => Some((i as u32, j as u32)),
                    _ => None,
                }
            })
        })
        .collect();
    Ok(OverlapGraph { node_count: records.len(), edges, theta })
}

/// Mass of the largest connected component of the induced subgraph, relative
/// to the number of sampled nodes.
pub fn largest_component_ratio(graph: &OverlapGraph, sampled_nodes: &[usize]) -> Result<f64> {
    if sampled_nodes.is_empty() {
        return Err(Error::EmptyInput("largest_component_ratio over zero nodes".into()));
    }
    let mut index_of = vec![usize::MAX; graph.node_count];
    for (local, &node) in sampled_nodes.iter().enumerate() {
        index_of[node] = local;
    }
    let mut uf = UnionFind::new(sampled_nodes.len());
    for &(a, b) in &graph.edges {
        let (la, lb) = (index_of[a as usize], index_of[b as usize]);
        if la != usize::MAX && lb != usize::MAX {
            uf.union(la, lb);
        }
    }
    let largest = (0..sampled_nodes.len())
        .map(|i| uf.set_size(i))
        .max()
        .unwrap_or(1);
    Ok(largest as f64 / sampled_nodes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{enumerate_dataset, CanvasSpec, DatasetManifest, GaussianKind};

    fn lattice(d: f64, sigma: f64, n: u32) -> Vec<SampleRecord> {
        let manifest = DatasetManifest::plain(CanvasSpec::open(n), GaussianKind::Bump, d, sigma);
        enumerate_dataset(&manifest).unwrap()
    }

    #[test]
    fn distant_bumps_gain_no_edge() {
        let records = lattice(16.0, 0.5, 32);
        let graph = build_graph(&records, 0.005).unwrap();
        assert_eq!(graph.node_count, 4);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn no_self_edges() {
        let records = lattice(4.0, 1.0, 32);
        let graph = build_graph(&records, 0.005).unwrap();
        assert!(graph.edges.iter().all(|&(a, b)| a != b));
    }

    #[test]
    fn pruned_graph_matches_dense_oracle() {
        let records = lattice(2.0, 1.0, 16);
        let dense = build_graph(&records, 0.005).unwrap();
        let pruned = build_graph_pruned(&records, 0.005, prune_radius(1.0, 1.0)).unwrap();
        assert_eq!(dense.edges, pruned.edges);
    }

    #[test]
    fn unit_lattice_is_fully_connected_at_low_threshold() {
        let records = lattice(1.0, 1.0, 16);
        let graph = build_graph_pruned(&records, 0.005, prune_radius(1.0, 1.0)).unwrap();
        let all: Vec<usize> = (0..records.len()).collect();
        assert_eq!(largest_component_ratio(&graph, &all).unwrap(), 1.0);
    }

    #[test]
    fn edgeless_graph_ratio_is_one_over_n() {
        let graph = OverlapGraph { node_count: 10, edges: vec![], theta: 0.1 };
        let nodes: Vec<usize> = (0..10).collect();
        assert_eq!(largest_component_ratio(&graph, &nodes).unwrap(), 0.1);
    }

    #[test]
    fn broken_path_has_two_components() {
        // Path of 10 nodes with the middle node removed from the sample:
        // components of sizes 5 and 4 remain.
        let edges: Vec<(u32, u32)> = (0..9).map(|i| (i as u32, i as u32 + 1)).collect();
        let graph = OverlapGraph { node_count: 10, edges, theta: 0.1 };
        let sampled: Vec<usize> = (0..10).filter(|&i| i != 5).collect();
        let ratio = largest_component_ratio(&graph, &sampled).unwrap();
        assert!((ratio - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_monotonicity() {
        let records = lattice(2.0, 1.0, 16);
        let loose = build_graph(&records, 0.005).unwrap();
        let tight = build_graph(&records, 0.05).unwrap();
        let loose_set: std::collections::BTreeSet<_> = loose.edges.iter().collect();
        assert!(tight.edges.len() <= loose.edges.len());
        assert!(tight.edges.iter().all(|e| loose_set.contains(e)));
    }

    #[test]
    fn graph_is_permutation_invariant() {
        let mut records = lattice(2.0, 1.0, 16);
        let graph_a = build_graph(&records, 0.01).unwrap();
        records.reverse();
        let graph_b = build_graph(&records, 0.01).unwrap();
        let n = records.len() as u32;
        let remap: std::collections::BTreeSet<(u32, u32)> = graph_b
            .edges
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (n - 1 - a, n - 1 - b);
                (a.min(b), a.max(b))
            })
            .collect();
        let orig: std::collections::BTreeSet<(u32, u32)> =
            graph_a.edges.iter().copied().collect();
        assert_eq!(orig, remap);
    }
}
