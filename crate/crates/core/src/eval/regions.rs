//! Label-space region tagging for held-out evaluations.

use crate::datagen::{HoldoutPlacement, HoldoutSpec};
use crate::{Error, Result};

/// Section of label space a sample belongs to, relative to a holdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    InDistribution,
    /// Cross only: inside the x-band, outside the y-band.
    VerticalExcl,
    /// Cross only: inside the y-band, outside the x-band.
    HorizontalExcl,
    /// Cross only: inside both bands.
    Intersection,
    /// Single-rect holdouts: strictly inside the held-out region.
    Ood,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::InDistribution => "in_distribution",
            Region::VerticalExcl => "vertical_excl",
            Region::HorizontalExcl => "horizontal_excl",
            Region::Intersection => "intersection",
            Region::Ood => "ood",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "in_distribution" => Region::InDistribution,
            "vertical_excl" => Region::VerticalExcl,
            "horizontal_excl" => Region::HorizontalExcl,
            "intersection" => Region::Intersection,
            "ood" => Region::Ood,
            other => return Err(Error::Region(format!("unknown region `{other}`"))),
        })
    }
}

/// Tags each label with its region. Cross holdouts yield the four-way
/// partition; single-rect holdouts yield {in_distribution, ood}. Membership
/// matches the enumeration rule (strict interior), so the tags partition any
/// label set.
pub fn region_partition(labels: &[(f64, f64)], holdout: &HoldoutSpec) -> Result<Vec<Region>> {
    match holdout.placement {
        HoldoutPlacement::Cross => {
            if holdout.rects.len() != 2 {
                return Err(Error::Region(format!(
                    "cross holdout needs two bands, found {}",
                    holdout.rects.len()
                )));
            }
            let (bx, by) = (&holdout.rects[0], &holdout.rects[1]);
            Ok(labels
                .iter()
                .map(|&(x, y)| {
                    let in_x = bx.contains_interior(x, y);
                    let in_y = by.contains_interior(x, y);
                    match (in_x, in_y) {
                        (true, true) => Region::Intersection,
                        (true, false) => Region::VerticalExcl,
                        (false, true) => Region::HorizontalExcl,
                        (false, false) => Region::InDistribution,
                    }
                })
                .collect())
        }
        HoldoutPlacement::BandX
        | HoldoutPlacement::BandY
        | HoldoutPlacement::InteriorSquare
        | HoldoutPlacement::ExteriorCorner => Ok(labels
            .iter()
            .map(|&(x, y)| {
                if holdout.excludes(x, y) {
                    Region::Ood
                } else {
                    Region::InDistribution
                }
            })
            .collect()),
        HoldoutPlacement::None => {
            Err(Error::Region("region partition needs a holdout".into()))
        }
    }
}
