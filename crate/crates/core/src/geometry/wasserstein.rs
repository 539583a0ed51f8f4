//! 1-D Wasserstein-1 distance between histograms over a shared binning.

use crate::{Error, Result, Scalar};

/// Fixed-binning histogram. Comparisons require identical (lo, hi, bins).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<S> {
    pub lo: S,
    pub hi: S,
    pub counts: Vec<S>,
}

impl<S: Scalar> Histogram<S> {
    pub fn new(lo: S, hi: S, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![S::zero(); bins] }
    }

    /// 50 uniform bins over the statistic's natural range.
    pub fn with_default_bins(lo: S, hi: S) -> Self {
        Self::new(lo, hi, 50)
    }

    pub fn bin_width(&self) -> S {
        (self.hi - self.lo) / S::from_f64_c(self.counts.len() as f64)
    }

    pub fn add(&mut self, value: S) {
        let bins = self.counts.len();
        let t = (value - self.lo) / (self.hi - self.lo);
        let idx = (t * S::from_f64_c(bins as f64)).to_f64_c().floor();
        let idx = (idx as isize).clamp(0, bins as isize - 1) as usize;
        self.counts[idx] += S::one();
    }

    pub fn from_values(lo: S, hi: S, bins: usize, values: &[S]) -> Self {
        let mut h = Self::new(lo, hi, bins);
        for &v in values {
            h.add(v);
        }
        h
    }

    pub fn total(&self) -> S {
        self.counts.iter().copied().sum()
    }
}

/// Wasserstein-1 distance via the closed-form cumulative-distribution
/// difference. Both histograms are normalized to unit mass; the result is in
/// the statistic's units (bin width times the CDF gap).
pub fn wasserstein1<S: Scalar>(a: &Histogram<S>, b: &Histogram<S>) -> Result<S> {
    if a.counts.is_empty() || b.counts.is_empty() {
        return Err(Error::Histogram("empty histogram".into()));
    }
    if a.counts.len() != b.counts.len() || a.lo != b.lo || a.hi != b.hi {
        return Err(Error::Histogram(format!(
            "binning mismatch: [{}, {}] x {} vs [{}, {}] x {}",
            a.lo,
            a.hi,
            a.counts.len(),
            b.lo,
            b.hi,
            b.counts.len()
        )));
    }
    let (ta, tb) = (a.total(), b.total());
    if ta == S::zero() || tb == S::zero() {
        return Err(Error::Histogram("histogram with zero mass".into()));
    }
    let mut cdf_a = S::zero();
    let mut cdf_b = S::zero();
    let mut acc = S::zero();
    for (&ca, &cb) in a.counts.iter().zip(&b.counts) {
        cdf_a += ca / ta;
        cdf_b += cb / tb;
        acc += (cdf_a - cdf_b).abs();
    }
    Ok(acc * a.bin_width())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: &[f64]) -> Histogram<f64> {
        Histogram { lo: 0.0, hi: counts.len() as f64, counts: counts.to_vec() }
    }

    #[test]
    fn identical_histograms_have_zero_distance() {
        let a = hist(&[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn translation_property_is_exact() {
        // Unit masses at bins 1 and 4 with bin width 1: distance 3.
        let a = hist(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = hist(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(wasserstein1(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn mass_normalization_is_internal() {
        let a = hist(&[2.0, 0.0]);
        let b = hist(&[0.0, 6.0]);
        // Both normalize to unit mass; distance = 1 bin.
        assert_eq!(wasserstein1(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn binning_mismatch_is_rejected() {
        let a = hist(&[1.0, 0.0]);
        let b = hist(&[1.0, 0.0, 0.0]);
        assert!(wasserstein1(&a, &b).is_err());
    }

    #[test]
    fn empty_and_zero_mass_are_errors() {
        let empty: Histogram<f64> = Histogram { lo: 0.0, hi: 1.0, counts: vec![] };
        let a = hist(&[1.0]);
        assert!(wasserstein1(&empty, &empty).is_err());
        let zero = hist(&[0.0]);
        assert!(wasserstein1(&a, &zero).is_err());
    }

    #[test]
    fn histogram_add_clamps_to_range() {
        let mut h = Histogram::<f64>::new(0.0, 1.0, 4);
        h.add(-5.0);
        h.add(0.1);
        h.add(0.99);
        h.add(2.0);
        assert_eq!(h.counts, vec![2.0, 0.0, 0.0, 2.0]);
    }
}
