//! Normalized L2 overlap between images.

use super::Image;
use crate::{Error, Result, Scalar};

/// Normalized L2-norm of the element-wise product of the inverted images:
/// `||sqrt(a .* b)||_2 / ||a||_2`.
///
/// Bumps are dark on a white background, so intensities are inverted
/// (`t -> 255 - t`) before the product; the overlap then measures bump mass.
/// The normalization uses `a` only, so the measure is asymmetric for unequal
/// images; [`overlap_l2_sym`] is the symmetrized variant.
pub fn overlap_l2<S: Scalar>(a: &Image, b: &Image) -> Result<S> {
    if a.side != b.side {
        return Err(Error::ShapeMismatch(format!(
            "overlap_l2: {}x{} vs {}x{}",
            a.side, a.side, b.side, b.side
        )));
    }
    let mut prod = S::zero();
    let mut norm_a = S::zero();
    for (&pa, &pb) in a.pixels.iter().zip(&b.pixels) {
        let ia = S::from_f64_c((255 - pa) as f64);
        let ib = S::from_f64_c((255 - pb) as f64);
        prod += ia * ib;
        norm_a += ia * ia;
    }
    if norm_a == S::zero() {
        return Err(Error::ZeroImage);
    }
    Ok((prod / norm_a).sqrt())
}

/// `max(overlap_l2(a, b), overlap_l2(b, a))`; the undirected overlap used for
/// graph edges.
pub fn overlap_l2_sym<S: Scalar>(a: &Image, b: &Image) -> Result<S> {
    let ab = overlap_l2::<S>(a, b)?;
    let ba = overlap_l2::<S>(b, a)?;
    Ok(ab.max(ba))
}
