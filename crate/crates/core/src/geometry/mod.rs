//! Representation geometry: eigenspectra, participation ratio, persistent
//! homology, ring-subspace orthogonality/parallelism tests, and Wasserstein
//! scoring against synthetic torus references.

mod pca;
mod rings;
mod rips;
mod torus;
mod wasserstein;

pub use pca::{participation_ratio, pca, Eigenspectrum, PcaOutput};
pub use rings::{
    orthogonality_test, parallelism_test, ring_subspaces, Axis, PairDraws, RingSubspace,
    TestKind, TestStats,
};
pub use rips::{
    farthest_point_sample, rips_persistence, PersistenceDiagram, PersistencePair, RipsParams,
};
pub use torus::{synth_torus, ReferenceTorus, TorusKind};
pub use wasserstein::{wasserstein1, Histogram};
