//! Lattice enumeration, visibility tagging, rim filtering, and seeded
//! subsampling.

use super::{
    CanvasSpec, DatasetManifest, DimTag, GaussianKind, GaussianSpec, GridSpec, RimPolicy,
    SampleRecord,
};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// Renders every lattice center outside the holdout interior, tags records,
/// applies the rim policy and the subsample directive.
///
/// Ordering is row-major in `(mu_x, mu_y)` per kind: `mu_x` outer, `mu_y`
/// inner, kinds in manifest order. Subsampling preserves this order.
pub fn enumerate_dataset(manifest: &DatasetManifest) -> Result<Vec<SampleRecord>> {
    manifest.validate()?;
    let xs = manifest.grid.x_values();
    let ys = manifest.grid.y_values();

    let mut centers = Vec::new();
    for &kind in &manifest.kinds {
        for &mu_x in &xs {
            for &mu_y in &ys {
                if !manifest.holdout.excludes(mu_x, mu_y) {
                    centers.push((kind, mu_x, mu_y));
                }
            }
        }
    }

    let records: Result<Vec<SampleRecord>> = centers
        .par_iter()
        .map(|&(kind, mu_x, mu_y)| {
            let spec = GaussianSpec {
                kind,
                mu_x,
                mu_y,
                sigma_x: manifest.sigma_x,
                sigma_y: manifest.sigma_y,
            };
            let image = super::render::<f64>(&spec, &manifest.canvas)?;
            let tag = dimensionality_tag(&spec, &manifest.canvas);
            Ok(SampleRecord { mu_x, mu_y, kind, tag, image })
        })
        .collect();
    let mut records = records?;

    match manifest.rim_policy {
        RimPolicy::NotApplicable => {}
        RimPolicy::Exclude2dRim => records.retain(|r| r.tag != DimTag::Two),
        RimPolicy::Include2dRim => records.retain(|r| {
            r.tag != DimTag::Two || is_rim_2d(r.mu_x, r.mu_y, &manifest.canvas)
        }),
    }

    Ok(subsample(
        records,
        manifest.subsample.lambda,
        manifest.subsample.seed,
        manifest.subsample.nested,
    )?)
}

/// Extended-canvas stripe dataset: SOS images over the full latent range,
/// tagged by visible dimensionality and filtered by the rim policy.
pub fn make_stripe_dataset(
    canvas: CanvasSpec,
    grid: GridSpec,
    sigma: f64,
    rim_policy: RimPolicy,
) -> Result<Vec<SampleRecord>> {
    if canvas.extended_margin == 0 {
        return Err(Error::InvalidCanvas(
            "stripe datasets need an extended margin so stripes can leave the window".into(),
        ));
    }
    let manifest = DatasetManifest {
        canvas,
        grid,
        kinds: vec![GaussianKind::Sos],
        sigma_x: sigma,
        sigma_y: sigma,
        holdout: super::HoldoutSpec::none(),
        subsample: super::SubsampleSpec::all(),
        rim_policy,
    };
    enumerate_dataset(&manifest)
}

/// Distance from the visibility threshold at which a stripe stops producing
/// any non-blank pixel in an SOS image: `255 * (g/2) >= 0.5  <=>  |p - mu| <=
/// 2 sigma sqrt(ln 255)`.
pub fn visibility_halfwidth(sigma: f64) -> f64 {
    2.0 * sigma * (255.0f64).ln().sqrt()
}

fn axis_distance_to_window(mu: f64, canvas: &CanvasSpec) -> f64 {
    let (lo, hi) = canvas.window();
    if mu < lo {
        lo - mu
    } else if mu > hi {
        mu - hi
    } else {
        0.0
    }
}

fn axis_visible(mu: f64, sigma: f64, canvas: &CanvasSpec) -> bool {
    axis_distance_to_window(mu, canvas) <= visibility_halfwidth(sigma)
}

/// Dimensionality of the visible content. A bump is its stripes' conjunction,
/// so it is either fully two-dimensional or invisible; an SOS contributes one
/// dimension per visible stripe; pure stripes contribute at most one.
pub fn dimensionality_tag(spec: &GaussianSpec, canvas: &CanvasSpec) -> DimTag {
    let vx = axis_visible(spec.mu_x, spec.sigma_x, canvas);
    let vy = axis_visible(spec.mu_y, spec.sigma_y, canvas);
    match spec.kind {
        GaussianKind::Bump => {
            if vx && vy {
                DimTag::Two
            } else {
                DimTag::Zero
            }
        }
        GaussianKind::Sos => match (vx, vy) {
            (true, true) => DimTag::Two,
            (false, false) => DimTag::Zero,
            _ => DimTag::One,
        },
        GaussianKind::StripeV => {
            if vx {
                DimTag::One
            } else {
                DimTag::Zero
            }
        }
        GaussianKind::StripeH => {
            if vy {
                DimTag::One
            } else {
                DimTag::Zero
            }
        }
    }
}

/// A 2D record whose conjunction is only partially visible: the center sits
/// outside the window on at least one axis.
pub fn is_rim_2d(mu_x: f64, mu_y: f64, canvas: &CanvasSpec) -> bool {
    axis_distance_to_window(mu_x, canvas) > 0.0 || axis_distance_to_window(mu_y, canvas) > 0.0
}

/// Keeps `max(1, floor(lambda * len))` records, chosen by a seeded
/// permutation. Nested mode uses one permutation per seed and takes a prefix,
/// so the kept set at a smaller fraction is a strict subset of the kept set
/// at any larger fraction. Output preserves the input record order.
pub fn subsample(
    records: Vec<SampleRecord>,
    lambda: f64,
    seed: u64,
    nested: bool,
) -> Result<Vec<SampleRecord>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidFraction(lambda));
    }
    if records.is_empty() || lambda == 1.0 {
        return Ok(records);
    }
    let keep = selection_indices(records.len(), lambda, seed, nested);
    let mut mask = vec![false; records.len()];
    for i in keep {
        mask[i] = true;
    }
    Ok(records
        .into_iter()
        .zip(mask)
        .filter_map(|(r, m)| m.then_some(r))
        .collect())
}

/// Indices kept by [`subsample`], unsorted (permutation-prefix order).
pub fn selection_indices(len: usize, lambda: f64, seed: u64, nested: bool) -> Vec<usize> {
    let count = ((lambda * len as f64).floor() as usize).clamp(1, len);
    // Non-nested draws an independent permutation per fraction by folding the
    // fraction bits into the stream.
    let effective = if nested { seed } else { mix(seed, lambda.to_bits()) };
    let mut rng = ChaCha20Rng::seed_from_u64(effective);
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut rng);
    perm.truncate(count);
    perm
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the xor; cheap seed derivation.
    let mut z = a ^ b.rotate_left(31);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::HoldoutSpec;
    use std::collections::BTreeSet;

    fn lattice_manifest(d: f64, holdout: HoldoutSpec) -> DatasetManifest {
        let mut m = DatasetManifest::plain(CanvasSpec::open(32), GaussianKind::Bump, d, 1.0);
        m.holdout = holdout;
        m
    }

    #[test]
    fn unit_increment_gives_1024_records() {
        let records = enumerate_dataset(&lattice_manifest(1.0, HoldoutSpec::none())).unwrap();
        assert_eq!(records.len(), 1024);
    }

    #[test]
    fn cross_holdout_count_matches_brute_force() {
        let holdout = HoldoutSpec::cross(13.0, 19.0);
        let records = enumerate_dataset(&lattice_manifest(1.0, holdout.clone())).unwrap();
        // Independent oracle: loop over all 1024 centers and test membership
        // directly against the band definition.
        let mut expect = 0usize;
        for x in 1..=32 {
            for y in 1..=32 {
                let (x, y) = (x as f64, y as f64);
                let in_x = 13.0 < x && x < 19.0;
                let in_y = 13.0 < y && y < 19.0;
                if !(in_x || in_y) {
                    expect += 1;
                }
            }
        }
        assert_eq!(expect, 729);
        assert_eq!(records.len(), expect);
        for r in &records {
            assert!(!holdout.excludes(r.mu_x, r.mu_y));
        }
    }

    #[test]
    fn holdout_covering_everything_yields_empty() {
        let holdout = HoldoutSpec {
            placement: crate::datagen::HoldoutPlacement::InteriorSquare,
            rects: vec![crate::datagen::Rect { x0: -1.0, x1: 33.0, y0: -1.0, y1: 33.0 }],
        };
        // Rect validation rejects out-of-range rects, so build a full-range
        // in-bounds cover instead.
        let holdout = HoldoutSpec {
            rects: vec![crate::datagen::Rect { x0: 0.0, x1: 32.0, y0: 0.0, y1: 32.0 }],
            ..holdout
        };
        let mut m = lattice_manifest(1.0, holdout);
        // Boundary centers survive a strict-interior test; shrink the grid to
        // the interior to make the cover total.
        m.grid = GridSpec { d_x: 1.0, d_y: 1.0, x_start: 1.0, x_stop: 31.0, y_start: 1.0, y_stop: 31.0 };
        let records = enumerate_dataset(&m).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn ordering_is_row_major_in_mu() {
        let records = enumerate_dataset(&lattice_manifest(8.0, HoldoutSpec::none())).unwrap();
        let centers: Vec<(f64, f64)> = records.iter().map(|r| (r.mu_x, r.mu_y)).collect();
        let mut sorted = centers.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, sorted);
    }

    #[test]
    fn subsample_identity_at_full_fraction() {
        let records = enumerate_dataset(&lattice_manifest(4.0, HoldoutSpec::none())).unwrap();
        let out = subsample(records.clone(), 1.0, 9, true).unwrap();
        assert_eq!(out, records);
    }

    #[test]
    fn subsample_takes_floor_count() {
        let records = enumerate_dataset(&lattice_manifest(1.0, HoldoutSpec::none())).unwrap();
        let out = subsample(records, 0.5, 7, true).unwrap();
        assert_eq!(out.len(), 512);
    }

    #[test]
    fn nested_subsamples_are_prefix_ordered_sets() {
        let records = enumerate_dataset(&lattice_manifest(2.0, HoldoutSpec::none())).unwrap();
        let small = subsample(records.clone(), 0.1, 11, true).unwrap();
        let large = subsample(records, 0.2, 11, true).unwrap();
        let small: BTreeSet<_> = small.iter().map(|r| (r.mu_x.to_bits(), r.mu_y.to_bits())).collect();
        let large: BTreeSet<_> = large.iter().map(|r| (r.mu_x.to_bits(), r.mu_y.to_bits())).collect();
        assert!(small.is_subset(&large));
        assert!(small.len() < large.len());
    }

    #[test]
    fn subsample_minimum_is_one_record() {
        let records = enumerate_dataset(&lattice_manifest(8.0, HoldoutSpec::none())).unwrap();
        let out = subsample(records, 0.0001, 3, true).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn stripe_tags_follow_visibility() {
        let canvas = CanvasSpec::extended(32, 6);
        // Window spans latent [6.5, 38.5]; visibility halfwidth at sigma=1 is
        // ~4.71.
        let tag = |mu_x: f64, mu_y: f64| {
            dimensionality_tag(
                &GaussianSpec::new(GaussianKind::Sos, mu_x, mu_y, 1.0),
                &canvas,
            )
        };
        assert_eq!(tag(16.0, 1.0), DimTag::One); // stripe_v visible, mu_y deep in margin
        assert_eq!(tag(1.0, 1.0), DimTag::Zero);
        assert_eq!(tag(16.0, 16.0), DimTag::Two);
        // Partially visible conjunction near the corner is still 2D.
        assert_eq!(tag(2.0, 2.0), DimTag::Two);
        assert!(is_rim_2d(2.0, 2.0, &canvas));
        assert!(!is_rim_2d(16.0, 16.0, &canvas));
    }

    #[test]
    fn rim_policies_filter_2d_records() {
        let canvas = CanvasSpec::extended(32, 6);
        let grid = GridSpec::square(2.0, 44.0);
        let excl = make_stripe_dataset(canvas, grid, 1.0, RimPolicy::Exclude2dRim).unwrap();
        assert!(excl.iter().all(|r| r.tag != DimTag::Two));
        let incl = make_stripe_dataset(canvas, grid, 1.0, RimPolicy::Include2dRim).unwrap();
        let rims: Vec<_> = incl.iter().filter(|r| r.tag == DimTag::Two).collect();
        assert!(!rims.is_empty());
        assert!(rims.iter().all(|r| is_rim_2d(r.mu_x, r.mu_y, &canvas)));
        let all = make_stripe_dataset(canvas, grid, 1.0, RimPolicy::NotApplicable).unwrap();
        assert!(incl.len() > excl.len());
        assert!(all.len() > incl.len());
    }

    #[test]
    fn stripe_dataset_requires_margin() {
        let canvas = CanvasSpec::open(32);
        let grid = GridSpec::square(2.0, 32.0);
        assert!(make_stripe_dataset(canvas, grid, 1.0, RimPolicy::Exclude2dRim).is_err());
    }

    #[test]
    fn enumeration_is_deterministic() {
        let m = lattice_manifest(2.0, HoldoutSpec::cross(13.0, 19.0));
        let a = enumerate_dataset(&m).unwrap();
        let b = enumerate_dataset(&m).unwrap();
        assert_eq!(a, b);
    }
}
