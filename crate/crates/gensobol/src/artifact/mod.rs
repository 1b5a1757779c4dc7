//! On-disk artifacts. Every writer is atomic (temp file + rename) and every
//! format has a reader that restores the written values exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

mod ensemble;
mod pce;
mod report;
mod spectrum;

pub use ensemble::{read_ensemble, read_ensemble_csv, write_ensemble, write_ensemble_csv, EnsembleHeader};
pub use pce::{
    read_pce, read_pce_trajectory, read_surrogate, write_pce, write_pce_trajectory, write_surrogate, PceFile,
};
pub use report::{
    read_bands_csv, read_csv, read_fixing_json, read_pointwise_csv, read_sobol_csv, read_sobol_json, read_window_csv,
    subset_label, write_bands_csv, write_csv, write_fixing, write_pointwise_csv, write_sobol, write_window_csv,
    BandRow, FixingJson, FixingRow, PointwiseRow, SobolJson, SobolRow, WindowRow,
};
pub use spectrum::{read_spectrum, read_spectrum_csv, write_spectrum, SpectrumHeader, SpectrumRow};

/// Write `bytes` to `path` through a sibling temp file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(ctx(), e))?;
        }
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(ctx(), e))?;
    f.write_all(bytes).map_err(|e| Error::io(ctx(), e))?;
    f.sync_all().map_err(|e| Error::io(ctx(), e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(ctx(), e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// One JSON header line followed by little-endian `f64` blocks.
pub fn write_blob<H: Serialize>(path: &Path, header: &H, blocks: &[&[f64]]) -> Result<()> {
    let mut out = serde_json::to_vec(header).map_err(|e| Error::format(path, e.to_string()))?;
    out.push(b'\n');
    out.reserve(8 * blocks.iter().map(|b| b.len()).sum::<usize>());
    for block in blocks {
        for x in *block {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    atomic_write(path, &out)
}

/// Header and the flat `f64` payload of a blob.
pub fn read_blob<H: DeserializeOwned>(path: &Path) -> Result<(H, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::format(path, "no header line"))?;
    let header = serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::format(path, format!("header: {e}")))?;
    let body = &bytes[nl + 1..];
    if body.len() % 8 != 0 {
        return Err(Error::format(path, "payload is not a whole number of f64 values"));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, data))
}

/// Split `data` into blocks of the given lengths, rejecting any size mismatch.
pub fn split_blocks<'a>(path: &Path, data: &'a [f64], lens: &[usize]) -> Result<Vec<&'a [f64]>> {
    let total: usize = lens.iter().sum();
    if total != data.len() {
        return Err(Error::format(path, format!("payload has {} values, header implies {total}", data.len())));
    }
    let mut out = Vec::with_capacity(lens.len());
    let mut at = 0;
    for &n in lens {
        out.push(&data[at..at + n]);
        at += n;
    }
    Ok(out)
}
