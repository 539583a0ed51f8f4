//! Laboratory for studying factorization, compositional generalization, and
//! percolation-driven manifold formation in conditional denoising diffusion
//! models trained on parametric 2D Gaussian image families.
//!
//! The pipeline runs end to end at desk scale: dataset synthesis
//! ([`datagen`]), conditional DDPM training and sampling ([`diffusion`]),
//! generation scoring ([`eval`]), representation geometry ([`geometry`]),
//! overlap-graph percolation ([`percolation`]), and experiment orchestration
//! ([`runner`]).

pub mod datagen;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod percolation;
pub mod runner;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar for analysis math. Rendering, geometry statistics, and
/// percolation all run at this precision unless instantiated otherwise.
pub type Real = f64;

/// Default element type for network training. The nn stack is generic over
/// f32/f64; training runs single precision for throughput.
pub type TrainElem = f32;
