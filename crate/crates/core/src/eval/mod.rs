//! Image-space scoring: center localization, the indicator accuracy metric,
//! and region-partitioned reporting.

mod accuracy;
mod locate;
mod regions;
mod report;

pub use accuracy::{accuracy, AccuracyReport, Axis, RegionAccuracy};
pub use locate::{locate_center, CenterEstimate, LocateMethod};
pub use regions::{region_partition, Region};
pub use report::{read_accuracy_csv, write_accuracy_csv};
