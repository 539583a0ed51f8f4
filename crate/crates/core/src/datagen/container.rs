//! Dataset container (binary, little-endian) and the manifest sidecar text.
//!
//! Container layout: magic `GBD1`, u32 version = 1, u32 N, u32
//! extended_margin, u32 record_count, u8 kind_code, f32 sigma_x, f32 sigma_y;
//! then per record: f32 mu_x, f32 mu_y, u8 dimensionality_tag, N*N bytes of
//! row-major pixels. Containers hold one kind; composite datasets are stored
//! as one container per part.

use super::{
    Boundary, CanvasSpec, DatasetManifest, DimTag, GaussianKind, GridSpec, HoldoutPlacement,
    HoldoutSpec, Image, Rect, RimPolicy, SampleRecord, SubsampleSpec,
};
use crate::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GBD1";
const VERSION: u32 = 1;

/// Writes records that share `kind` into one container.
pub fn write_dataset(
    path: &Path,
    canvas: &CanvasSpec,
    kind: GaussianKind,
    sigma_x: f64,
    sigma_y: f64,
    records: &[SampleRecord],
) -> Result<()> {
    if let Some(bad) = records.iter().find(|r| r.kind != kind) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("record kind {:?} differs from container kind {kind:?}", bad.kind),
        });
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(canvas.n)?;
    w.write_u32::<LittleEndian>(canvas.extended_margin)?;
    w.write_u32::<LittleEndian>(records.len() as u32)?;
    w.write_u8(kind.code())?;
    w.write_f32::<LittleEndian>(sigma_x as f32)?;
    w.write_f32::<LittleEndian>(sigma_y as f32)?;
    for r in records {
        if r.image.side != canvas.n {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("record image side {} != canvas N {}", r.image.side, canvas.n),
            });
        }
        w.write_f32::<LittleEndian>(r.mu_x as f32)?;
        w.write_f32::<LittleEndian>(r.mu_y as f32)?;
        w.write_u8(r.tag.code())?;
        w.write_all(&r.image.pixels)?;
    }
    w.flush()?;
    Ok(())
}

/// Container header fields needed to interpret the records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetHeader {
    pub n: u32,
    pub extended_margin: u32,
    pub kind: GaussianKind,
    pub sigma_x: f32,
    pub sigma_y: f32,
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<SampleRecord>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let bad = |reason: &str| Error::Format { path: path.to_path_buf(), reason: reason.into() };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = r.read_u32::<LittleEndian>()?;
    let extended_margin = r.read_u32::<LittleEndian>()?;
    let count = r.read_u32::<LittleEndian>()? as usize;
    let kind = GaussianKind::from_code(r.read_u8()?)?;
    let sigma_x = r.read_f32::<LittleEndian>()?;
    let sigma_y = r.read_f32::<LittleEndian>()?;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let mu_x = r.read_f32::<LittleEndian>()? as f64;
        let mu_y = r.read_f32::<LittleEndian>()? as f64;
        let tag = DimTag::from_code(r.read_u8()?)?;
        let mut pixels = vec![0u8; (n * n) as usize];
        r.read_exact(&mut pixels)?;
        records.push(SampleRecord { mu_x, mu_y, kind, tag, image: Image::new(n, pixels) });
    }
    let header = DatasetHeader { n, extended_margin, kind, sigma_x, sigma_y };
    Ok((header, records))
}

/// Flat `key = value` rendering of a manifest; field order is fixed so the
/// text (and its fingerprint) is deterministic.
pub fn manifest_text(m: &DatasetManifest) -> String {
    let mut s = String::new();
    let kv = |s: &mut String, k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv(&mut s, "version", "1".into());
    kv(&mut s, "canvas.n", m.canvas.n.to_string());
    kv(
        &mut s,
        "canvas.boundary",
        match m.canvas.boundary {
            Boundary::Open => "open".into(),
            Boundary::Periodic => "periodic".into(),
        },
    );
    kv(&mut s, "canvas.extended_margin", m.canvas.extended_margin.to_string());
    kv(&mut s, "grid.d_x", fmt_f64(m.grid.d_x));
    kv(&mut s, "grid.d_y", fmt_f64(m.grid.d_y));
    kv(&mut s, "grid.x_start", fmt_f64(m.grid.x_start));
    kv(&mut s, "grid.x_stop", fmt_f64(m.grid.x_stop));
    kv(&mut s, "grid.y_start", fmt_f64(m.grid.y_start));
    kv(&mut s, "grid.y_stop", fmt_f64(m.grid.y_stop));
    kv(
        &mut s,
        "kinds",
        m.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
    );
    kv(&mut s, "sigma_x", fmt_f64(m.sigma_x));
    kv(&mut s, "sigma_y", fmt_f64(m.sigma_y));
    kv(
        &mut s,
        "holdout.placement",
        match m.holdout.placement {
            HoldoutPlacement::None => "none".into(),
            HoldoutPlacement::BandX => "band_x".into(),
            HoldoutPlacement::BandY => "band_y".into(),
            HoldoutPlacement::Cross => "cross".into(),
            HoldoutPlacement::InteriorSquare => "interior_square".into(),
            HoldoutPlacement::ExteriorCorner => "exterior_corner".into(),
        },
    );
    kv(
        &mut s,
        "holdout.rects",
        m.holdout
            .rects
            .iter()
            .map(|r| {
                format!("{},{},{},{}", fmt_f64(r.x0), fmt_f64(r.x1), fmt_f64(r.y0), fmt_f64(r.y1))
            })
            .collect::<Vec<_>>()
            .join(";"),
    );
    kv(&mut s, "subsample.lambda", fmt_f64(m.subsample.lambda));
    kv(&mut s, "subsample.seed", m.subsample.seed.to_string());
    kv(&mut s, "subsample.nested", m.subsample.nested.to_string());
    kv(
        &mut s,
        "rim_policy",
        match m.rim_policy {
            RimPolicy::Include2dRim => "include_2d_rim".into(),
            RimPolicy::Exclude2dRim => "exclude_2d_rim".into(),
            RimPolicy::NotApplicable => "n/a".into(),
        },
    );
    s
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        // Shortest round-trip representation.
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

pub fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<()> {
    std::fs::write(path, manifest_text(m))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text).map_err(|reason| Error::Format { path: path.to_path_buf(), reason })
}

pub fn parse_manifest(text: &str) -> std::result::Result<DatasetManifest, String> {
    let mut map = std::collections::BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", ln + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| map.get(k).ok_or_else(|| format!("missing key `{k}`"));
    let getf = |k: &str| -> std::result::Result<f64, String> {
        parse_f64(get(k)?).ok_or_else(|| format!("bad float for `{k}`"))
    };
    let getu = |k: &str| -> std::result::Result<u64, String> {
        get(k)?.parse().map_err(|_| format!("bad integer for `{k}`"))
    };
    if get("version")? != "1" {
        return Err("unsupported manifest version".into());
    }
    let canvas = CanvasSpec {
        n: getu("canvas.n")? as u32,
        boundary: match get("canvas.boundary")?.as_str() {
            "open" => Boundary::Open,
            "periodic" => Boundary::Periodic,
            other => return Err(format!("bad boundary `{other}`")),
        },
        extended_margin: getu("canvas.extended_margin")? as u32,
    };
    let grid = GridSpec {
        d_x: getf("grid.d_x")?,
        d_y: getf("grid.d_y")?,
        x_start: getf("grid.x_start")?,
        x_stop: getf("grid.x_stop")?,
        y_start: getf("grid.y_start")?,
        y_stop: getf("grid.y_stop")?,
    };
    let kinds = get("kinds")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| GaussianKind::from_name(s.trim()).map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let placement = match get("holdout.placement")?.as_str() {
        "none" => HoldoutPlacement::None,
        "band_x" => HoldoutPlacement::BandX,
        "band_y" => HoldoutPlacement::BandY,
        "cross" => HoldoutPlacement::Cross,
        "interior_square" => HoldoutPlacement::InteriorSquare,
        "exterior_corner" => HoldoutPlacement::ExteriorCorner,
        other => return Err(format!("bad placement `{other}`")),
    };
    let rects_text = get("holdout.rects")?;
    let rects = rects_text
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parts: Vec<_> = s.split(',').collect();
            if parts.len() != 4 {
                return Err(format!("bad rect `{s}`"));
            }
            let f = |i: usize| parse_f64(parts[i]).ok_or_else(|| format!("bad rect `{s}`"));
            Ok(Rect { x0: f(0)?, x1: f(1)?, y0: f(2)?, y1: f(3)? })
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    let manifest = DatasetManifest {
        canvas,
        grid,
        kinds,
        sigma_x: getf("sigma_x")?,
        sigma_y: getf("sigma_y")?,
        holdout: HoldoutSpec { placement, rects },
        subsample: SubsampleSpec {
            lambda: getf("subsample.lambda")?,
            seed: getu("subsample.seed")?,
            nested: get("subsample.nested")?.parse().map_err(|_| "bad nested flag")?,
        },
        rim_policy: match get("rim_policy")?.as_str() {
            "include_2d_rim" => RimPolicy::Include2dRim,
            "exclude_2d_rim" => RimPolicy::Exclude2dRim,
            "n/a" => RimPolicy::NotApplicable,
            other => return Err(format!("bad rim policy `{other}`")),
        },
    };
    Ok(manifest)
}
