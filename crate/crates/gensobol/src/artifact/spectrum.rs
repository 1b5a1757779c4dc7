use std::path::Path;

use gensobol_core::kl::{Normalization, Spectrum};
use gensobol_core::linalg::Matrix;
use serde::{Deserialize, Serialize};

use super::{read_blob, report::read_csv, report::write_csv, split_blocks, write_blob};
use crate::error::{Error, Result};

const FORMAT: &str = "gensobol-spectrum";

/// One row of the spectrum table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub i: usize,
    pub lambda: f64,
    /// `lambda_i / lambda_1`.
    pub lambda_rel: f64,
    /// `sum_{j <= i} lambda_j / sum_m w_m K_mm`.
    pub cumulative_r: f64,
}

/// Header of the binary block: eigenvalues (`k`), grid weights (`n`),
/// eigenvectors (`k x n`, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumHeader {
    pub format: String,
    pub k: usize,
    pub n: usize,
    pub trace: f64,
    pub clipped: f64,
    pub lanczos_fallback: bool,
    /// Key of the ensemble the spectrum was computed from.
    pub ensemble_key: Option<String>,
}

fn rows(s: &Spectrum) -> Vec<SpectrumRow> {
    let rel = s.normalized(Normalization::Leading);
    let mut acc = 0.0;
    s.eigenvalues()
        .iter()
        .zip(rel)
        .enumerate()
        .map(|(i, (&lambda, lambda_rel))| {
            acc += lambda;
            SpectrumRow {
                i: i + 1,
                lambda,
                lambda_rel,
                cumulative_r: if s.trace() > 0.0 { acc / s.trace() } else { 0.0 },
            }
        })
        .collect()
}

/// Write `spectrum.csv`-style rows to `csv_path` and the eigenpairs to `bin_path`.
pub fn write_spectrum(csv_path: &Path, bin_path: &Path, s: &Spectrum, ensemble_key: Option<String>) -> Result<()> {
    write_csv(csv_path, &rows(s))?;
    let header = SpectrumHeader {
        format: FORMAT.into(),
        k: s.len(),
        n: s.weights().len(),
        trace: s.trace(),
        clipped: s.clipped(),
        lanczos_fallback: s.lanczos_fallback(),
        ensemble_key,
    };
    write_blob(bin_path, &header, &[s.eigenvalues(), s.weights(), s.vectors().as_slice()])
}

pub fn read_spectrum(bin_path: &Path) -> Result<(SpectrumHeader, Spectrum)> {
    let (h, data): (SpectrumHeader, Vec<f64>) = read_blob(bin_path)?;
    if h.format != FORMAT {
        return Err(Error::format(bin_path, format!("format tag `{}` is not `{FORMAT}`", h.format)));
    }
    let b = split_blocks(bin_path, &data, &[h.k, h.n, h.k * h.n])?;
    let vectors = Matrix::from_row_major(h.k, h.n, b[2].to_vec())?;
    let s = Spectrum::from_parts(b[0].to_vec(), vectors, b[1].to_vec(), h.trace)?;
    Ok((h, s))
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<SpectrumRow>> {
    read_csv(path)
}
