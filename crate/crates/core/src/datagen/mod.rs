//! Deterministic synthesis of the Gaussian image families and every dataset
//! variant built from them: plain bump/SOS/stripe lattices, held-out regions,
//! extended-canvas stripe datasets, and seeded nested subsampling.

mod container;
mod enumerate;
mod overlap;
mod render;

pub use container::{
    manifest_text, parse_manifest, read_dataset, read_manifest, write_dataset, write_manifest,
    DatasetHeader,
};
pub use enumerate::{
    dimensionality_tag, enumerate_dataset, is_rim_2d, make_stripe_dataset, selection_indices,
    subsample, visibility_halfwidth,
};
pub use overlap::{overlap_l2, overlap_l2_sym};
pub use render::render;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Boundary condition of the image canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Canvas geometry: visible side length, boundary condition, and the width of
/// the invisible latent border used by the extended stripe datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasSpec {
    /// Pixels per side of the visible window.
    pub n: u32,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Invisible latent border per side; 0 for plain datasets.
    #[serde(default)]
    pub extended_margin: u32,
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

impl CanvasSpec {
    pub fn open(n: u32) -> Self {
        CanvasSpec { n, boundary: Boundary::Open, extended_margin: 0 }
    }

    pub fn periodic(n: u32) -> Self {
        CanvasSpec { n, boundary: Boundary::Periodic, extended_margin: 0 }
    }

    pub fn extended(n: u32, margin: u32) -> Self {
        CanvasSpec { n, boundary: Boundary::Open, extended_margin: margin }
    }

    /// Side length of the latent frame the labels live on.
    pub fn total_side(&self) -> u32 {
        self.n + 2 * self.extended_margin
    }

    /// Continuous extent of the visible pixels in latent coordinates.
    /// Pixel centers sit at integers `margin+1 ..= margin+n`, each covering
    /// half a pixel on either side.
    pub fn window(&self) -> (f64, f64) {
        let m = self.extended_margin as f64;
        (m + 0.5, m + self.n as f64 + 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidCanvas(format!("N = {} < 4", self.n)));
        }
        if self.boundary == Boundary::Periodic && self.extended_margin != 0 {
            return Err(Error::InvalidCanvas(
                "periodic boundary requires extended_margin = 0".into(),
            ));
        }
        Ok(())
    }
}

/// The four image families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianKind {
    /// Product of a vertical and a horizontal stripe: a dark blob.
    Bump,
    /// Average of the two stripes ("sum of stripes").
    Sos,
    /// Horizontal stripe alone (varies with y).
    StripeH,
    /// Vertical stripe alone (varies with x).
    StripeV,
}

impl GaussianKind {
    pub fn code(self) -> u8 {
        match self {
            GaussianKind::Bump => 0,
            GaussianKind::Sos => 1,
            GaussianKind::StripeH => 2,
            GaussianKind::StripeV => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => GaussianKind::Bump,
            1 => GaussianKind::Sos,
            2 => GaussianKind::StripeH,
            3 => GaussianKind::StripeV,
            other => {
                return Err(Error::InvalidGaussian(format!("unknown kind code {other}")))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            GaussianKind::Bump => "bump",
            GaussianKind::Sos => "sos",
            GaussianKind::StripeH => "stripe_h",
            GaussianKind::StripeV => "stripe_v",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "bump" => GaussianKind::Bump,
            "sos" => GaussianKind::Sos,
            "stripe_h" => GaussianKind::StripeH,
            "stripe_v" => GaussianKind::StripeV,
            other => return Err(Error::InvalidGaussian(format!("unknown kind `{other}`"))),
        })
    }
}

/// One Gaussian to render: kind, continuous center, and spreads in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub kind: GaussianKind,
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaussianSpec {
    pub fn new(kind: GaussianKind, mu_x: f64, mu_y: f64, sigma: f64) -> Self {
        GaussianSpec { kind, mu_x, mu_y, sigma_x: sigma, sigma_y: sigma }
    }

    pub fn validate(&self, canvas: &CanvasSpec) -> Result<()> {
        canvas.validate()?;
        if !(self.sigma_x > 0.0) || !(self.sigma_y > 0.0) {
            return Err(Error::InvalidGaussian(format!(
                "sigma must be positive, got ({}, {})",
                self.sigma_x, self.sigma_y
            )));
        }
        let hi = canvas.total_side() as f64;
        let in_range = |v: f64| (0.0..=hi).contains(&v);
        // Stripe kinds constrain only the coordinate they actually use.
        let (need_x, need_y) = match self.kind {
            GaussianKind::StripeV => (true, false),
            GaussianKind::StripeH => (false, true),
            _ => (true, true),
        };
        if (need_x && !in_range(self.mu_x)) || (need_y && !in_range(self.mu_y)) {
            return Err(Error::InvalidGaussian(format!(
                "center ({}, {}) outside label range [0, {hi}]",
                self.mu_x, self.mu_y
            )));
        }
        Ok(())
    }
}

/// Lattice of centers: per-axis start/stop/step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d_x: f64,
    pub d_y: f64,
    pub x_start: f64,
    pub x_stop: f64,
    pub y_start: f64,
    pub y_stop: f64,
}

impl GridSpec {
    /// Square lattice `{d, 2d, ..., stop}` on both axes; the §2 convention
    /// (d = 0.1 on a 32-canvas yields 320 values per axis).
    pub fn square(d: f64, stop: f64) -> Self {
        GridSpec { d_x: d, d_y: d, x_start: d, x_stop: stop, y_start: d, y_stop: stop }
    }

    pub fn validate(&self, canvas: &CanvasSpec) -> Result<()> {
        if !(self.d_x > 0.0) || !(self.d_y > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "increments must be positive, got ({}, {})",
                self.d_x, self.d_y
            )));
        }
        let hi = canvas.total_side() as f64;
        for &(start, stop) in &[(self.x_start, self.x_stop), (self.y_start, self.y_stop)] {
            if start > stop || start < 0.0 || stop > hi {
                return Err(Error::InvalidGrid(format!(
                    "range [{start}, {stop}] outside label range [0, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn x_values(&self) -> Vec<f64> {
        axis_values(self.x_start, self.x_stop, self.d_x)
    }

    pub fn y_values(&self) -> Vec<f64> {
        axis_values(self.y_start, self.y_stop, self.d_y)
    }
}

/// `start + k*step` for k = 0.. while the value stays within `stop` (with a
/// relative tolerance so fractional steps land on the nominal endpoint).
pub(crate) fn axis_values(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

/// Axis-aligned open rectangle in label space. Membership is a strict
/// interior test; boundary centers are kept in the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn band_x(lo: f64, hi: f64) -> Self {
        Rect { x0: lo, x1: hi, y0: f64::NEG_INFINITY, y1: f64::INFINITY }
    }

    pub fn band_y(lo: f64, hi: f64) -> Self {
        Rect { x0: f64::NEG_INFINITY, x1: f64::INFINITY, y0: lo, y1: hi }
    }

    pub fn square(x0: f64, y0: f64, w: f64) -> Self {
        Rect { x0, x1: x0 + w, y0, y1: y0 + w }
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64, y: f64) -> bool {
        self.x0 < x && x < self.x1 && self.y0 < y && y < self.y1
    }
}

/// Placement shorthand used by the experiment configs; `rects` is what the
/// enumeration actually consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutPlacement {
    None,
    BandX,
    BandY,
    Cross,
    InteriorSquare,
    ExteriorCorner,
}

/// Held-out label-space regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSpec {
    pub placement: HoldoutPlacement,
    pub rects: Vec<Rect>,
}

impl HoldoutSpec {
    pub fn none() -> Self {
        HoldoutSpec { placement: HoldoutPlacement::None, rects: Vec::new() }
    }

    /// Vertical band: all centers with `mu_x` strictly inside `[lo, hi]`.
    pub fn band_x(lo: f64, hi: f64) -> Self {
        HoldoutSpec { placement: HoldoutPlacement::BandX, rects: vec![Rect::band_x(lo, hi)] }
    }

    /// Union of one x-band and one y-band, intersecting in a square.
    pub fn cross(lo: f64, hi: f64) -> Self {
        HoldoutSpec {
            placement: HoldoutPlacement::Cross,
            rects: vec![Rect::band_x(lo, hi), Rect::band_y(lo, hi)],
        }
    }

    /// W x W square centered on the lattice range midpoint.
    pub fn interior_square(canvas: &CanvasSpec, w: f64) -> Self {
        let c = canvas.total_side() as f64 / 2.0;
        HoldoutSpec {
            placement: HoldoutPlacement::InteriorSquare,
            rects: vec![Rect::square(c - w / 2.0, c - w / 2.0, w)],
        }
    }

    /// W x W square in the low corner of the label range.
    pub fn exterior_corner(w: f64) -> Self {
        HoldoutSpec {
            placement: HoldoutPlacement::ExteriorCorner,
            rects: vec![Rect::square(0.0, 0.0, w)],
        }
    }

    pub fn excludes(&self, x: f64, y: f64) -> bool {
        self.rects.iter().any(|r| r.contains_interior(x, y))
    }

    pub fn validate(&self, canvas: &CanvasSpec) -> Result<()> {
        let hi = canvas.total_side() as f64;
        for r in &self.rects {
            let in_axis = |lo: f64, hx: f64| {
                (lo.is_infinite() || (0.0..=hi).contains(&lo))
                    && (hx.is_infinite() || (0.0..=hi).contains(&hx))
                    && lo <= hx
            };
            if !in_axis(r.x0, r.x1) || !in_axis(r.y0, r.y1) {
                return Err(Error::InvalidHoldout(format!("rect {r:?} outside label range")));
            }
        }
        Ok(())
    }
}

/// Seeded subsampling directive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    /// Fraction of records kept, in (0, 1].
    pub lambda: f64,
    pub seed: u64,
    /// Nested mode draws one global permutation per seed and takes prefixes,
    /// so smaller fractions are strict subsets of larger ones.
    pub nested: bool,
}

impl SubsampleSpec {
    pub fn all() -> Self {
        SubsampleSpec { lambda: 1.0, seed: 0, nested: true }
    }
}

impl Default for SubsampleSpec {
    fn default() -> Self {
        Self::all()
    }
}

/// Filter applied to extended-canvas stripe datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RimPolicy {
    /// Keep 0D/1D records plus the rim of partially visible conjunctions.
    Include2dRim,
    /// Keep 0D/1D records only.
    Exclude2dRim,
    /// No filtering.
    NotApplicable,
}

/// Declarative dataset description. Rendering a manifest twice yields
/// byte-identical samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub canvas: CanvasSpec,
    pub grid: GridSpec,
    /// Kinds rendered per center, all sharing the same spread.
    pub kinds: Vec<GaussianKind>,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub holdout: HoldoutSpec,
    pub subsample: SubsampleSpec,
    pub rim_policy: RimPolicy,
}

impl DatasetManifest {
    /// Plain single-kind lattice over `{d, 2d, ..., N}` with no holdout.
    pub fn plain(canvas: CanvasSpec, kind: GaussianKind, d: f64, sigma: f64) -> Self {
        let grid = GridSpec::square(d, canvas.total_side() as f64);
        DatasetManifest {
            canvas,
            grid,
            kinds: vec![kind],
            sigma_x: sigma,
            sigma_y: sigma,
            holdout: HoldoutSpec::none(),
            subsample: SubsampleSpec::all(),
            rim_policy: RimPolicy::NotApplicable,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.canvas.validate()?;
        self.grid.validate(&self.canvas)?;
        self.holdout.validate(&self.canvas)?;
        if self.kinds.is_empty() {
            return Err(Error::InvalidGaussian("manifest lists no kinds".into()));
        }
        if !(self.sigma_x > 0.0) || !(self.sigma_y > 0.0) {
            return Err(Error::InvalidGaussian("manifest sigma must be positive".into()));
        }
        if !(self.subsample.lambda > 0.0 && self.subsample.lambda <= 1.0) {
            return Err(Error::InvalidFraction(self.subsample.lambda));
        }
        Ok(())
    }

    /// Fingerprint of the serialized manifest text (SHA-256, hex).
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(container::manifest_text(self).as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Visible-content dimensionality of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DimTag {
    Zero = 0,
    One = 1,
    Two = 2,
}

impl DimTag {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => DimTag::Zero,
            1 => DimTag::One,
            2 => DimTag::Two,
            other => return Err(Error::InvalidGaussian(format!("unknown dim tag {other}"))),
        })
    }
}

/// Grayscale image over the visible window, row-major, top-left pixel (1,1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub side: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(side: u32, pixels: Vec<u8>) -> Self {
        debug_assert_eq!(pixels.len(), (side * side) as usize);
        Image { side, pixels }
    }

    /// Pixel at column x, row y in the 1-based convention.
    pub fn at(&self, x: u32, y: u32) -> u8 {
        self.pixels[((y - 1) * self.side + (x - 1)) as usize]
    }

    pub fn transpose(&self) -> Image {
        let n = self.side as usize;
        let mut out = vec![0u8; n * n];
        for r in 0..n {
            for c in 0..n {
                out[c * n + r] = self.pixels[r * n + c];
            }
        }
        Image { side: self.side, pixels: out }
    }
}

/// One dataset record: continuous center label plus the rendered image.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub mu_x: f64,
    pub mu_y: f64,
    pub kind: GaussianKind,
    pub tag: DimTag,
    pub image: Image,
}
