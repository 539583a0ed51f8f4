//! Synthetic torus reference clouds.

use crate::diffusion::ActivationCloud;
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusKind {
    /// Doughnut embedding in 3-D; rings in the two directions share
    /// coordinates (a coupled geometry).
    Standard3d,
    /// S^1 x S^1 with each circle in its own orthogonal plane in 4-D (the
    /// factorized geometry).
    Clifford4d,
}

/// Reference cloud specification: kind, radii (standard torus), grid size
/// matching the activation grid, and optional jitter for re-sampled runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceTorus {
    pub kind: TorusKind,
    pub major_radius: f64,
    pub minor_radius: f64,
    pub grid: (usize, usize),
    /// Gaussian jitter amplitude and seed; used to compare independently
    /// re-sampled oracle runs.
    pub jitter: Option<(f64, u64)>,
}

impl ReferenceTorus {
    pub fn standard(grid: (usize, usize)) -> Self {
        ReferenceTorus {
            kind: TorusKind::Standard3d,
            major_radius: 2.0,
            minor_radius: 1.0,
            grid,
            jitter: None,
        }
    }

    pub fn clifford(grid: (usize, usize)) -> Self {
        ReferenceTorus {
            kind: TorusKind::Clifford4d,
            major_radius: 1.0,
            minor_radius: 1.0,
            grid,
            jitter: None,
        }
    }

    pub fn with_jitter(mut self, amplitude: f64, seed: u64) -> Self {
        self.jitter = Some((amplitude, seed));
        self
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            TorusKind::Standard3d => 3,
            TorusKind::Clifford4d => 4,
        }
    }
}

/// Samples the torus on a uniform angle grid. Labels mimic the activation
/// grid convention: (i+1, j+1) grid indices so ring grouping works the same
/// way as on model activations.
pub fn synth_torus<S: Scalar>(spec: &ReferenceTorus) -> ActivationCloud {
    let (nu, nv) = spec.grid;
    let dim = spec.dim();
    let mut data = Vec::with_capacity(nu * nv * dim);
    let mut labels = Vec::with_capacity(nu * nv);
    let mut jitter_rng = spec
        .jitter
        .map(|(_, seed)| ChaCha20Rng::seed_from_u64(seed));
    let amp = spec.jitter.map(|(a, _)| a).unwrap_or(0.0);
    let tau = std::f64::consts::TAU;
    for i in 0..nu {
        let u = tau * i as f64 / nu as f64;
        for j in 0..nv {
            let v = tau * j as f64 / nv as f64;
            let point: Vec<f64> = match spec.kind {
                TorusKind::Standard3d => {
                    let (rr, r) = (spec.major_radius, spec.minor_radius);
                    vec![
                        (rr + r * v.cos()) * u.cos(),
                        (rr + r * v.cos()) * u.sin(),
                        r * v.sin(),
                    ]
                }
                TorusKind::Clifford4d => {
                    let s = 1.0 / 2.0f64.sqrt();
                    vec![s * u.cos(), s * u.sin(), s * v.cos(), s * v.sin()]
                }
            };
            for p in point {
                let jittered = match jitter_rng.as_mut() {
                    Some(rng) => p + amp * rng.gen_range(-1.0..1.0),
                    None => p,
                };
                data.push(S::from_f64_c(jittered).to_f64_c() as f32);
            }
            labels.push(((i + 1) as f64, (j + 1) as f64));
        }
    }
    ActivationCloud::new(nu * nv, dim, data, labels, 0, 0)
}
