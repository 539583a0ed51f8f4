//! The indicator accuracy metric and region-partitioned reports.

use super::{CenterEstimate, Region};
use crate::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Both,
    X,
    Y,
}

/// Mean of the indicator products `1(|mu_x - x_hat| < tol) * 1(|mu_y - y_hat|
/// < tol)`; the axis variants drop one indicator. The inequality is strict,
/// so an estimate off by exactly `tol` scores zero.
pub fn accuracy(
    estimates: &[CenterEstimate],
    labels: &[(f64, f64)],
    axis: Axis,
    tol: f64,
) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("accuracy over zero samples".into()));
    }
    if estimates.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimates vs {} labels",
            estimates.len(),
            labels.len()
        )));
    }
    let hits = estimates
        .iter()
        .zip(labels)
        .filter(|(e, &(mu_x, mu_y))| {
            let hit_x = (mu_x - e.x_hat).abs() < tol;
            let hit_y = (mu_y - e.y_hat).abs() < tol;
            match axis {
                Axis::Both => hit_x && hit_y,
                Axis::X => hit_x,
                Axis::Y => hit_y,
            }
        })
        .count();
    Ok(hits as f64 / estimates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAccuracy {
    pub overall: f64,
    pub x_only: f64,
    pub y_only: f64,
    pub n: usize,
}

/// Overall and per-region accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub overall: f64,
    pub x_only: f64,
    pub y_only: f64,
    pub n: usize,
    pub tol: f64,
    pub per_region: BTreeMap<Region, RegionAccuracy>,
}

impl AccuracyReport {
    /// Scores every sample and, when region tags are supplied, each region
    /// separately. Regions without samples are omitted.
    pub fn build(
        estimates: &[CenterEstimate],
        labels: &[(f64, f64)],
        regions: Option<&[Region]>,
        tol: f64,
    ) -> Result<Self> {
        let overall = accuracy(estimates, labels, Axis::Both, tol)?;
        let x_only = accuracy(estimates, labels, Axis::X, tol)?;
        let y_only = accuracy(estimates, labels, Axis::Y, tol)?;
        let mut per_region = BTreeMap::new();
        if let Some(regions) = regions {
            if regions.len() != labels.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} region tags vs {} labels",
                    regions.len(),
                    labels.len()
                )));
            }
            let mut grouped: BTreeMap<Region, (Vec<CenterEstimate>, Vec<(f64, f64)>)> =
                BTreeMap::new();
            for ((&r, &e), &l) in regions.iter().zip(estimates).zip(labels) {
                let entry = grouped.entry(r).or_default();
                entry.0.push(e);
                entry.1.push(l);
            }
            for (region, (est, lab)) in grouped {
                per_region.insert(
                    region,
                    RegionAccuracy {
                        overall: accuracy(&est, &lab, Axis::Both, tol)?,
                        x_only: accuracy(&est, &lab, Axis::X, tol)?,
                        y_only: accuracy(&est, &lab, Axis::Y, tol)?,
                        n: est.len(),
                    },
                );
            }
        }
        Ok(AccuracyReport { overall, x_only, y_only, n: estimates.len(), tol, per_region })
    }

    pub fn region(&self, region: Region) -> Option<&RegionAccuracy> {
        self.per_region.get(&region)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::LocateMethod;

    fn est(x: f64, y: f64) -> CenterEstimate {
        CenterEstimate { x_hat: x, y_hat: y, method: LocateMethod::DarkestPixel }
    }

    #[test]
    fn perfect_estimates_score_one() {
        let labels = vec![(3.0, 4.0), (10.0, 12.0)];
        let ests: Vec<_> = labels.iter().map(|&(x, y)| est(x, y)).collect();
        assert_eq!(accuracy(&ests, &labels, Axis::Both, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn off_by_exactly_one_scores_zero() {
        let labels = vec![(3.0, 4.0), (10.0, 12.0)];
        let ests: Vec<_> = labels.iter().map(|&(x, y)| est(x + 1.0, y)).collect();
        assert_eq!(accuracy(&ests, &labels, Axis::Both, 1.0).unwrap(), 0.0);
        assert_eq!(accuracy(&ests, &labels, Axis::X, 1.0).unwrap(), 0.0);
        // The y indicator alone still passes.
        assert_eq!(accuracy(&ests, &labels, Axis::Y, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn rounded_grid_estimates_score_one() {
        // 32x32 grid of half-integer labels; estimates are labels rounded to
        // the nearest integer, so every error is exactly 0.5 < 1.
        let mut labels = Vec::new();
        for i in 1..=32 {
            for j in 1..=32 {
                labels.push((i as f64 - 0.5, j as f64 - 0.5));
            }
        }
        let ests: Vec<_> = labels.iter().map(|&(x, y)| est(x.round(), y.round())).collect();
        assert_eq!(accuracy(&ests, &labels, Axis::Both, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(accuracy(&[], &[], Axis::Both, 1.0).is_err());
    }

    #[test]
    fn both_axis_accuracy_bounded_by_single_axes() {
        let labels = vec![(1.0, 1.0), (5.0, 5.0), (9.0, 9.0), (13.0, 13.0)];
        let ests = vec![est(1.0, 1.0), est(5.0, 7.0), est(11.0, 9.0), est(15.0, 15.0)];
        let both = accuracy(&ests, &labels, Axis::Both, 1.0).unwrap();
        let x = accuracy(&ests, &labels, Axis::X, 1.0).unwrap();
        let y = accuracy(&ests, &labels, Axis::Y, 1.0).unwrap();
        assert!(both <= x && both <= y);
    }

    #[test]
    fn order_permutation_leaves_accuracy_unchanged() {
        let labels = vec![(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)];
        let ests = vec![est(1.2, 2.0), est(9.0, 4.0), est(5.0, 6.4)];
        let a = accuracy(&ests, &labels, Axis::Both, 1.0).unwrap();
        let perm = [2usize, 0, 1];
        let ests_p: Vec<_> = perm.iter().map(|&i| ests[i]).collect();
        let labels_p: Vec<_> = perm.iter().map(|&i| labels[i]).collect();
        assert_eq!(a, accuracy(&ests_p, &labels_p, Axis::Both, 1.0).unwrap());
    }
}
