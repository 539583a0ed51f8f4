//! CSV emission for accuracy reports.

use super::{AccuracyReport, Region};
use crate::{Error, Result};
use std::path::Path;

/// Writes the report as `region, axis, n, accuracy` rows. The synthetic
/// region `all` carries the unpartitioned scores.
pub fn write_accuracy_csv(path: &Path, report: &AccuracyReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["region", "axis", "n", "accuracy"]).map_err(csv_err(path))?;
    let mut row = |region: &str, axis: &str, n: usize, acc: f64| {
        w.write_record([region, axis, &n.to_string(), &format!("{acc}")])
    };
    row("all", "both", report.n, report.overall).map_err(csv_err(path))?;
    row("all", "x", report.n, report.x_only).map_err(csv_err(path))?;
    row("all", "y", report.n, report.y_only).map_err(csv_err(path))?;
    for (region, acc) in &report.per_region {
        row(region.name(), "both", acc.n, acc.overall).map_err(csv_err(path))?;
        row(region.name(), "x", acc.n, acc.x_only).map_err(csv_err(path))?;
        row(region.name(), "y", acc.n, acc.y_only).map_err(csv_err(path))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back as `(region, axis, n, accuracy)`, validating the schema.
pub fn read_accuracy_csv(path: &Path) -> Result<Vec<(Region, String, usize, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["region", "axis", "n", "accuracy"] {
        return Err(Error::CsvSchema {
            path: path.to_path_buf(),
            reason: format!("unexpected header {headers:?}"),
        });
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err(path))?;
        let region = &record[0];
        if region == "all" {
            continue;
        }
        let region = Region::from_name(region)?;
        let axis = record[1].to_string();
        let n: usize = record[2].parse().map_err(|_| Error::CsvSchema {
            path: path.to_path_buf(),
            reason: format!("bad n `{}`", &record[2]),
        })?;
        let acc: f64 = record[3].parse().map_err(|_| Error::CsvSchema {
            path: path.to_path_buf(),
            reason: format!("bad accuracy `{}`", &record[3]),
        })?;
        rows.push((region, axis, n, acc));
    }
    Ok(rows)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::CsvSchema { path: path.to_path_buf(), reason: e.to_string() }
}
