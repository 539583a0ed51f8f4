//! Activation extraction over the evaluation grid and the binary dump format.
//!
//! Dump layout (little-endian): magic `ACT1`, u32 rows, u32 cols, u32
//! layer_id, u32 capture_timestep, rows*cols f32 row-major activations, then
//! rows * 2 f32 labels.

use super::{sample_with_capture, ActivationCloud, Checkpoint};
use crate::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"ACT1";

/// Runs the reverse process for every grid label and captures the requested
/// layer's output at the terminal step. The default analysis grid is the
/// full label lattice (32 x 32 = 1024 rows).
pub fn extract_activations(
    ckpt: &Checkpoint,
    labels: &[(f64, f64)],
    side: usize,
    seed: u64,
    layer: u32,
) -> Result<ActivationCloud> {
    let out = sample_with_capture(ckpt, labels, side, seed, Some(layer))?;
    Ok(out.cloud.expect("capture layer was requested"))
}

pub fn write_activation_dump(path: &Path, cloud: &ActivationCloud) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(cloud.rows as u32)?;
    w.write_u32::<LittleEndian>(cloud.cols as u32)?;
    w.write_u32::<LittleEndian>(cloud.layer_id)?;
    w.write_u32::<LittleEndian>(cloud.capture_timestep)?;
    for &v in &cloud.data {
        w.write_f32::<LittleEndian>(v)?;
    }
    for &(x, y) in &cloud.labels {
        w.write_f32::<LittleEndian>(x as f32)?;
        w.write_f32::<LittleEndian>(y as f32)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_activation_dump(path: &Path) -> Result<ActivationCloud> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format { path: path.to_path_buf(), reason: "bad magic".into() });
    }
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let layer_id = r.read_u32::<LittleEndian>()?;
    let capture_timestep = r.read_u32::<LittleEndian>()?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(r.read_f32::<LittleEndian>()?);
    }
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let x = r.read_f32::<LittleEndian>()? as f64;
        let y = r.read_f32::<LittleEndian>()? as f64;
        labels.push((x, y));
    }
    Ok(ActivationCloud::new(rows, cols, data, labels, layer_id, capture_timestep))
}
