//! Scalar abstraction for the analysis math.
//!
//! Everything closed-form (rendering, overlaps, Wasserstein, participation
//! ratio, torus synthesis, noise schedules) is generic over [`Scalar`] so it
//! runs at f32 or f64. Solver-backed code (eigendecomposition, persistence
//! reduction) is pinned to f64 internally and converts at the boundary.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64 literals; panics only on NaN inputs that
    /// FromPrimitive cannot represent, which never occurs for constants.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
