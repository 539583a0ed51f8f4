//! Percolation sweeps over (sigma, theta, lambda) and the neighbor-overlap
//! curve.

use super::{build_graph_pruned, largest_component_ratio, prune_radius};
use crate::datagen::{
    enumerate_dataset, overlap_l2_sym, render, selection_indices, CanvasSpec, DatasetManifest,
    GaussianKind, GaussianSpec,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Sweep configuration. The base dataset is the fixed `d = 1.0` lattice; all
/// sigmas reuse the same sampled grid points so curves differ only in sigma.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PercolationConfig {
    /// Canvas side; 1024 base centers come from d = 1.0 on 32.
    pub n: u32,
    pub d: f64,
    pub sigmas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub runs: usize,
    pub nested: bool,
    pub seed: u64,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            n: 32,
            d: 1.0,
            sigmas: vec![0.1, 0.3, 0.5, 1.0, 2.0],
            thetas: vec![0.005, 0.01, 0.05, 0.1],
            lambdas: (1..=10).map(|k| k as f64 / 10.0).collect(),
            runs: 5,
            nested: true,
            seed: 0,
        }
    }
}

impl PercolationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("percolation runs must be >= 1".into()));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::Config("lambda values must lie in (0, 1]".into()));
        }
        if self.sigmas.iter().any(|&s| s <= 0.0) || self.thetas.iter().any(|&t| t <= 0.0) {
            return Err(Error::Config("sigma and theta must be positive".into()));
        }
        Ok(())
    }
}

/// One averaged sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub sigma: f64,
    pub theta: f64,
    pub lambda: f64,
    pub mean_ratio: f64,
    pub std: f64,
    pub runs: usize,
}

/// Largest-component mass ratio versus sampled fraction, per (sigma, theta).
#[derive(Debug, Clone, Default)]
pub struct PercolationCurve {
    pub points: Vec<CurvePoint>,
}

impl PercolationCurve {
    pub fn slice(&self, sigma: f64, theta: f64) -> Vec<&CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.sigma == sigma && p.theta == theta)
            .collect()
    }
}

/// Runs the sweep: for each sigma the base lattice is rendered once and its
/// overlap graph thresholded per theta; each run draws one seeded permutation
/// shared across lambdas (nested mode), and each lambda takes the prefix.
pub fn sweep(config: &PercolationConfig) -> Result<PercolationCurve> {
    config.validate()?;
    let mut points = Vec::new();
    for &sigma in &config.sigmas {
        let manifest = DatasetManifest::plain(
            CanvasSpec::open(config.n),
            GaussianKind::Bump,
            config.d,
            sigma,
        );
        let records = enumerate_dataset(&manifest)?;
        let count = records.len();
        for &theta in &config.thetas {
            let graph = build_graph_pruned(&records, theta, prune_radius(sigma, sigma))?;
            for &lambda in &config.lambdas {
                let mut ratios = Vec::with_capacity(config.runs);
                for run in 0..config.runs {
                    // Same grid points across sigmas: the permutation seed
                    // depends only on (seed, run).
                    let sampled = selection_indices(
                        count,
                        lambda,
                        config.seed.wrapping_add(run as u64),
                        config.nested,
                    );
                    ratios.push(largest_component_ratio(&graph, &sampled)?);
                }
                let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
                let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                    / ratios.len() as f64;
                points.push(CurvePoint {
                    sigma,
                    theta,
                    lambda,
                    mean_ratio: mean,
                    std: var.sqrt(),
                    runs: config.runs,
                });
            }
        }
    }
    Ok(PercolationCurve { points })
}

/// Row of the neighbor-overlap table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapCurveRow {
    pub sigma: f64,
    pub d: f64,
    pub overlap: f64,
}

/// Symmetrized overlap between the two lattice neighbors nearest the canvas
/// center, per (sigma, d). Blank renders (sub-pixel spreads at off-pixel
/// centers) report zero overlap.
pub fn overlap_curve(sigmas: &[f64], ds: &[f64], n: u32) -> Result<Vec<OverlapCurveRow>> {
    let canvas = CanvasSpec::open(n);
    let mid = n as f64 / 2.0;
    let mut rows = Vec::new();
    for &sigma in sigmas {
        if sigma <= 0.0 {
            return Err(Error::InvalidGaussian(format!("sigma {sigma} must be positive")));
        }
        for &d in ds {
            let overlap = if d == 0.0 {
                1.0
            } else {
                let c = (mid / d).floor() * d;
                let a = render::<f64>(
                    &GaussianSpec::new(GaussianKind::Bump, c, mid, sigma),
                    &canvas,
                )?;
                let b = render::<f64>(
                    &GaussianSpec::new(GaussianKind::Bump, c + d, mid, sigma),
                    &canvas,
                )?;
                overlap_l2_sym::<f64>(&a, &b).unwrap_or(0.0)
            };
            rows.push(OverlapCurveRow { sigma, d, overlap });
        }
    }
    Ok(rows)
}

/// CSV schema: sigma, theta, lambda, mean_ratio, std, runs.
pub fn write_curve_csv(path: &Path, curve: &PercolationCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let err = |e: csv::Error| Error::CsvSchema { path: path.to_path_buf(), reason: e.to_string() };
    w.write_record(["sigma", "theta", "lambda", "mean_ratio", "std", "runs"]).map_err(err)?;
    for p in &curve.points {
        w.write_record([
            format!("{}", p.sigma),
            format!("{}", p.theta),
            format!("{}", p.lambda),
            format!("{}", p.mean_ratio),
            format!("{}", p.std),
            format!("{}", p.runs),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<PercolationCurve> {
    let mut r = csv::Reader::from_path(path)?;
    let err = |reason: String| Error::CsvSchema { path: path.to_path_buf(), reason };
    let headers = r.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>()
        != ["sigma", "theta", "lambda", "mean_ratio", "std", "runs"]
    {
        return Err(err(format!("unexpected header {headers:?}")));
    }
    let mut points = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let f = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| err(format!("bad float `{}`", &record[i])))
        };
        points.push(CurvePoint {
            sigma: f(0)?,
            theta: f(1)?,
            lambda: f(2)?,
            mean_ratio: f(3)?,
            std: f(4)?,
            runs: record[5].parse().map_err(|_| err(format!("bad runs `{}`", &record[5])))?,
        });
    }
    Ok(PercolationCurve { points })
}
