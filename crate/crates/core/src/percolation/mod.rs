//! Overlap-graph percolation: largest-connected-component mass ratios as a
//! function of the sampled data fraction.

mod graph;
mod sweep;
mod union_find;

pub use graph::{build_graph, largest_component_ratio, OverlapGraph};
pub use sweep::{
    overlap_curve, read_curve_csv, sweep, write_curve_csv, CurvePoint, OverlapCurveRow,
    PercolationConfig, PercolationCurve,
};
pub use union_find::UnionFind;
