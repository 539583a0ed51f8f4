//! Principal component analysis and the participation ratio.

use crate::diffusion::ActivationCloud;
use crate::{Error, Result, Scalar};
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of the covariance, descending, with explained-variance ratios
/// over the full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspectrum {
    pub eigenvalues: Vec<f64>,
    pub ratios: Vec<f64>,
    /// True when the cloud was degenerate (all rows identical).
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct PcaOutput {
    pub spectrum: Eigenspectrum,
    /// Top-k principal axes, one row per axis (k x d).
    pub axes: Vec<Vec<f64>>,
    /// Projections onto the top-k axes (n x k, row-major).
    pub projections: Vec<f64>,
    pub k: usize,
}

/// PCA of the cloud's rows: eigen-decomposition of the covariance of the
/// mean-centered rows plus projections onto the top-k axes. Uses the Gram
/// matrix when the feature dimension exceeds the row count, which yields the
/// same nonzero spectrum.
pub fn pca(cloud: &ActivationCloud, k: usize) -> Result<PcaOutput> {
    pca_points(&cloud.points_f64(), cloud.rows, cloud.cols, k)
}

/// PCA over a raw (n x d) row-major matrix.
pub fn pca_points(points: &[f64], n: usize, d: usize, k: usize) -> Result<PcaOutput> {
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput("pca over an empty cloud".into()));
    }
    if k > n.min(d) {
        return Err(Error::ShapeMismatch(format!(
            "k = {k} exceeds min(rows, cols) = {}",
            n.min(d)
        )));
    }
    debug_assert_eq!(points.len(), n * d);
    // Center columns.
    let mut centered = points.to_vec();
    for j in 0..d {
        let mut mean = 0.0;
        for i in 0..n {
            mean += centered[i * d + j];
        }
        mean /= n as f64;
        for i in 0..n {
            centered[i * d + j] -= mean;
        }
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let x = DMatrix::from_row_slice(n, d, &centered);

    let (mut eigenvalues, axes_full): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let cov = (x.transpose() * &x) / denom;
        let eig = SymmetricEigen::new(cov);
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let vals = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let axes = idx
            .iter()
            .take(k)
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (vals, axes)
    } else {
        // Gram trick: XX^T/(n-1) shares the nonzero eigenvalues; axis w =
        // X^T u / sqrt((n-1) lambda).
        let gram = (&x * x.transpose()) / denom;
        let eig = SymmetricEigen::new(gram);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let mut axes = Vec::with_capacity(k);
        for &i in idx.iter().take(k) {
            let lambda = eig.eigenvalues[i].max(0.0);
            let u = eig.eigenvectors.column(i);
            let mut w = vec![0.0; d];
            if lambda > 1e-300 {
                let scale = 1.0 / (denom * lambda).sqrt();
                for r in 0..n {
                    let ur = u[r] * scale;
                    for (j, wj) in w.iter_mut().enumerate() {
                        *wj += centered[r * d + j] * ur;
                    }
                }
            }
            axes.push(w);
        }
        (vals, axes)
    };

    let trace: f64 = eigenvalues.iter().sum();
    let degenerate = trace <= 0.0;
    let ratios = if degenerate {
        eigenvalues.iter().map(|_| 0.0).collect()
    } else {
        eigenvalues.iter().map(|&v| v / trace).collect()
    };
    if degenerate {
        for v in &mut eigenvalues {
            *v = 0.0;
        }
    }

    let mut projections = vec![0.0; n * k];
    for (a, axis) in axes_full.iter().enumerate() {
        for i in 0..n {
            let mut dot = 0.0;
            for j in 0..d {
                dot += centered[i * d + j] * axis[j];
            }
            projections[i * k + a] = dot;
        }
    }
    Ok(PcaOutput {
        spectrum: Eigenspectrum { eigenvalues, ratios, degenerate },
        axes: axes_full,
        projections,
        k,
    })
}

/// Effective dimension count `(sum lambda)^2 / sum lambda^2`.
pub fn participation_ratio<S: Scalar>(eigenvalues: &[S]) -> Result<S> {
    if eigenvalues.is_empty() || eigenvalues.iter().all(|&v| v == S::zero()) {
        return Err(Error::DegenerateSpectrum(
            "participation ratio needs a positive eigenvalue".into(),
        ));
    }
    let sum: S = eigenvalues.iter().copied().sum();
    let sq: S = eigenvalues.iter().map(|&v| v * v).sum();
    Ok(sum * sum / sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn pr_of_equal_eigenvalues_counts_them() {
        let pr: f64 = participation_ratio(&[2.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(pr, 4.0);
        let pr: f64 = participation_ratio(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(pr, 1.0);
    }

    #[test]
    fn pr_is_scale_invariant_exactly() {
        let vals = [0.7f64, 0.21, 0.035, 0.0012];
        let scaled: Vec<f64> = vals.iter().map(|v| v * 2.0).collect();
        let a: f64 = participation_ratio(&vals).unwrap();
        let b: f64 = participation_ratio(&scaled).unwrap();
        // Power-of-two scaling is exact in floating point.
        assert_eq!(a, b);
    }

    #[test]
    fn pr_rejects_zero_spectrum() {
        assert!(participation_ratio::<f64>(&[0.0, 0.0]).is_err());
        assert!(participation_ratio::<f64>(&[]).is_err());
    }

    #[test]
    fn line_cloud_has_one_nonzero_eigenvalue() {
        // Points on a line through 10-D space.
        let dir: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).cos()).collect();
        let n = 50;
        let mut points = vec![0.0; n * 10];
        for i in 0..n {
            for j in 0..10 {
                points[i * 10 + j] = dir[j] * (i as f64 - 25.0);
            }
        }
        let out = pca_points(&points, n, 10, 2).unwrap();
        assert!(out.spectrum.eigenvalues[0] > 1.0);
        assert!(out.spectrum.eigenvalues[1].abs() < 1e-9);
        assert!((out.spectrum.ratios[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_gaussian_has_flat_top_spectrum() {
        // Sample covariance oracle: four approximately equal top eigenvalues.
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let n = 10_000;
        let d = 4;
        let points: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        let out = pca_points(&points, n, d, 4).unwrap();
        let vals = &out.spectrum.eigenvalues;
        for &v in vals {
            assert!((v - 1.0).abs() < 0.1, "{vals:?}");
        }
        let pr: f64 = participation_ratio(vals).unwrap();
        assert!((pr - 4.0).abs() < 0.05, "{pr}");
    }

    #[test]
    fn degenerate_cloud_is_flagged() {
        let points = vec![3.0; 5 * 4];
        let out = pca_points(&points, 5, 4, 2).unwrap();
        assert!(out.spectrum.degenerate);
        assert!(out.spectrum.eigenvalues.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn planar_cloud_projections_preserve_pairwise_distances() {
        // A 2-D cloud embedded in 6-D via an orthogonal map: top-2 PCA
        // projections reproduce pairwise distances exactly.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let basis = [
            [0.5, 0.5, 0.5, 0.5, 0.0, 0.0],
            [0.5, -0.5, 0.5, -0.5, 0.0, 0.0],
        ];
        let n = 40;
        let mut coords = Vec::new();
        let mut points = vec![0.0; n * 6];
        for i in 0..n {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            coords.push((a, b));
            for j in 0..6 {
                points[i * 6 + j] = a * basis[0][j] + b * basis[1][j];
            }
        }
        let out = pca_points(&points, n, 6, 2).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                let d_orig = {
                    let (ai, bi) = coords[i];
                    let (aj, bj) = coords[j];
                    ((ai - aj).powi(2) + (bi - bj).powi(2)).sqrt()
                };
                let d_proj = {
                    let pi = &out.projections[i * 2..i * 2 + 2];
                    let pj = &out.projections[j * 2..j * 2 + 2];
                    ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2)).sqrt()
                };
                assert!((d_orig - d_proj).abs() < 1e-9, "{d_orig} vs {d_proj}");
            }
        }
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (n, d) = (12, 30); // d > n forces the Gram path
        let points: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        let gram = pca_points(&points, n, d, 3).unwrap();
        // Covariance oracle computed densely.
        let mut centered = points.clone();
        for j in 0..d {
            let mean: f64 = (0..n).map(|i| points[i * d + j]).sum::<f64>() / n as f64;
            for i in 0..n {
                centered[i * d + j] -= mean;
            }
        }
        let x = DMatrix::from_row_slice(n, d, &centered);
        let cov = (x.transpose() * &x) / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for i in 0..3 {
            assert!((gram.spectrum.eigenvalues[i] - vals[i]).abs() < 1e-9);
        }
    }
}
