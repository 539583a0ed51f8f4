//! Pixel synthesis for the four Gaussian families.

use super::{Boundary, CanvasSpec, GaussianKind, GaussianSpec, Image};
use crate::{Result, Scalar};

/// Renders one Gaussian onto the canvas.
///
/// Pixel centers sit at integer latent coordinates `1..=total_side`; for an
/// extended canvas only the central `n x n` window is materialized. Brightness
/// follows
///
/// - bump:   `255 * (1 - gx*gy)`
/// - sos:    `255 * (1 - (gx + gy)/2)`
/// - stripe: `255 * (1 - g)` for the relevant axis
///
/// with `g = exp(-(p - mu)^2 / (4 sigma^2))`, distances wrapped modulo N on
/// periodic canvases. Values quantize by round-half-away-from-zero and clamp
/// to `[0, 255]`.
pub fn render<S: Scalar>(spec: &GaussianSpec, canvas: &CanvasSpec) -> Result<Image> {
    spec.validate(canvas)?;
    let n = canvas.n;
    let margin = canvas.extended_margin;
    let period = match canvas.boundary {
        Boundary::Periodic => Some(S::from_f64_c(canvas.n as f64)),
        Boundary::Open => None,
    };

    let mu_x = S::from_f64_c(spec.mu_x);
    let mu_y = S::from_f64_c(spec.mu_y);
    let inv4sx2 = S::one() / (S::from_f64_c(4.0) * S::from_f64_c(spec.sigma_x * spec.sigma_x));
    let inv4sy2 = S::one() / (S::from_f64_c(4.0) * S::from_f64_c(spec.sigma_y * spec.sigma_y));
    let full = S::from_f64_c(255.0);
    let half = S::from_f64_c(0.5);

    let gauss = |p: u32, mu: S, inv4s2: S| -> S {
        let mut d = S::from_f64_c(p as f64) - mu;
        if let Some(period) = period {
            d = d - period * (d / period).round();
        }
        (-(d * d) * inv4s2).exp()
    };

    // Row stripes (gy) depend only on the row, column stripes (gx) only on
    // the column; precompute each axis once.
    let gx: Vec<S> =
        (1..=n).map(|i| gauss(i + margin, mu_x, inv4sx2)).collect();
    let gy: Vec<S> =
        (1..=n).map(|j| gauss(j + margin, mu_y, inv4sy2)).collect();

    let mut pixels = vec![0u8; (n * n) as usize];
    for (row, &gyv) in gy.iter().enumerate() {
        for (col, &gxv) in gx.iter().enumerate() {
            let dip = match spec.kind {
                GaussianKind::Bump => gxv * gyv,
                GaussianKind::Sos => half * (gxv + gyv),
                GaussianKind::StripeV => gxv,
                GaussianKind::StripeH => gyv,
            };
            pixels[row * n as usize + col] = quantize(full * (S::one() - dip));
        }
    }
    Ok(Image::new(n, pixels))
}

/// Round half away from zero, clamp to the 8-bit range.
pub fn quantize<S: Scalar>(v: S) -> u8 {
    let r = if v >= S::zero() {
        (v + S::from_f64_c(0.5)).floor()
    } else {
        (v - S::from_f64_c(0.5)).ceil()
    };
    let r = r.to_f64_c();
    r.clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::GaussianKind::*;

    fn canvas32() -> CanvasSpec {
        CanvasSpec::open(32)
    }

    #[test]
    fn bump_center_pixel_is_zero() {
        let img = render::<f64>(&GaussianSpec::new(Bump, 16.0, 16.0, 1.0), &canvas32()).unwrap();
        assert_eq!(img.at(16, 16), 0);
    }

    #[test]
    fn bump_far_pixel_is_white() {
        let img = render::<f64>(&GaussianSpec::new(Bump, 16.0, 16.0, 1.0), &canvas32()).unwrap();
        assert_eq!(img.at(1, 1), 255);
    }

    #[test]
    fn sos_on_stripe_far_from_other_quantizes_to_128() {
        // On the vertical stripe (x = mu_x) far from the horizontal one:
        // 255 * (1 - 1/2) = 127.5, round half away from zero -> 128.
        let img = render::<f64>(&GaussianSpec::new(Sos, 16.0, 16.0, 1.0), &canvas32()).unwrap();
        assert_eq!(img.at(16, 30), 128);
    }

    #[test]
    fn stripes_use_single_axis() {
        let v = render::<f64>(&GaussianSpec::new(StripeV, 10.0, 16.0, 1.0), &canvas32()).unwrap();
        assert_eq!(v.at(10, 1), 0);
        assert_eq!(v.at(10, 32), 0);
        assert_eq!(v.at(20, 16), 255);
        let h = render::<f64>(&GaussianSpec::new(StripeH, 16.0, 10.0, 1.0), &canvas32()).unwrap();
        assert_eq!(h.at(1, 10), 0);
        assert_eq!(h.at(16, 20), 255);
    }

    #[test]
    fn transpose_symmetry_on_diagonal_center() {
        let img = render::<f64>(&GaussianSpec::new(Bump, 11.5, 11.5, 1.3), &canvas32()).unwrap();
        assert_eq!(img, img.transpose());
    }

    #[test]
    fn periodic_rendering_wraps_center() {
        let canvas = CanvasSpec::periodic(32);
        let a = render::<f64>(&GaussianSpec::new(Bump, 2.0, 16.0, 1.0), &canvas).unwrap();
        // Same center shifted by a full period renders identically; the label
        // range only admits mu in [0, N], so compare 0 and N on one axis.
        let b = render::<f64>(&GaussianSpec::new(Bump, 0.0, 16.0, 1.0), &canvas).unwrap();
        let c = render::<f64>(&GaussianSpec::new(Bump, 32.0, 16.0, 1.0), &canvas).unwrap();
        assert_eq!(b, c);
        // And a bump near the seam shows mass on both sides.
        assert!(a.at(31, 16) < 255);
        assert_eq!(a.at(2, 16), 0);
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let spec = GaussianSpec::new(Bump, 16.0, 16.0, 0.0);
        assert!(render::<f64>(&spec, &canvas32()).is_err());
    }

    #[test]
    fn rejects_center_outside_extended_range() {
        let canvas = CanvasSpec::extended(32, 6);
        let spec = GaussianSpec::new(StripeV, 50.0, 16.0, 1.0);
        assert!(render::<f64>(&spec, &canvas).is_err());
        // 44 is the top of the extended range and is accepted.
        let spec = GaussianSpec::new(StripeV, 44.0, 16.0, 1.0);
        assert!(render::<f64>(&spec, &canvas).is_ok());
    }

    #[test]
    fn extended_canvas_crops_visible_window() {
        let canvas = CanvasSpec::extended(32, 6);
        // Stripe in the latent margin leaves the visible window blank except
        // for tails; at mu_x = 1 the nearest visible pixel (latent 7) is 6
        // sigma away.
        let img = render::<f64>(&GaussianSpec::new(StripeV, 1.0, 22.0, 1.0), &canvas).unwrap();
        assert_eq!(img.side, 32);
        assert!(img.pixels.iter().all(|&p| p == 255));
        // Stripe at latent 22 lands on visible column 22 - 6 = 16.
        let img = render::<f64>(&GaussianSpec::new(StripeV, 22.0, 22.0, 1.0), &canvas).unwrap();
        assert_eq!(img.at(16, 5), 0);
    }

    #[test]
    fn f32_and_f64_agree_on_lattice_bumps() {
        let spec = GaussianSpec::new(Bump, 9.0, 21.0, 1.0);
        let a = render::<f32>(&spec, &canvas32()).unwrap();
        let b = render::<f64>(&spec, &canvas32()).unwrap();
        // Not required to be bit-identical in general, but on-lattice integer
        // centers stay comfortably away from rounding boundaries.
        assert_eq!(a, b);
    }
}
