use std::path::Path;

use gensobol_core::kl::{KlSurrogate, Spectrum};
use gensobol_core::linalg::Matrix;
use gensobol_core::pce::{total_degree_basis, PcBasis, PcExpansion, PceTrajectory};
use gensobol_core::quadrature::{TimeRule, TimeRuleKind};
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};

/// One expansion: total-degree basis `(Np, N_ord)`, its multi-indices and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceFile {
    #[serde(rename = "Np")]
    pub np: usize,
    #[serde(rename = "N_ord")]
    pub order: usize,
    pub indices: Vec<Vec<u32>>,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryFile {
    #[serde(rename = "Np")]
    np: usize,
    #[serde(rename = "N_ord")]
    order: usize,
    indices: Vec<Vec<u32>>,
    times: Vec<f64>,
    /// One coefficient vector per time node.
    coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SurrogateFile {
    /// `trapezoid` or `custom`.
    time_rule: String,
    times: Vec<f64>,
    time_weights: Vec<f64>,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Row `i` is the eigenvector of mode `i` on the time grid.
    eigenvectors: Vec<Vec<f64>>,
    modes: Vec<PceFile>,
}

fn indices(basis: &PcBasis) -> Vec<Vec<u32>> {
    (0..basis.len()).map(|k| basis.alpha(k).to_vec()).collect()
}

/// Rebuild the basis and check the stored multi-indices against it.
fn basis_for(path: &Path, np: usize, order: usize, idx: &[Vec<u32>]) -> Result<PcBasis> {
    let basis = total_degree_basis(np, order).map_err(|e| Error::format(path, e.to_string()))?;
    if idx.len() != basis.len() || idx.iter().enumerate().any(|(k, a)| a.as_slice() != basis.alpha(k)) {
        return Err(Error::format(path, "multi-indices are not the graded total-degree basis"));
    }
    Ok(basis)
}

fn to_file(e: &PcExpansion) -> PceFile {
    PceFile { np: e.basis().np(), order: e.basis().order(), indices: indices(e.basis()), coeffs: e.coeffs().to_vec() }
}

fn from_file(path: &Path, f: &PceFile) -> Result<PcExpansion> {
    let basis = basis_for(path, f.np, f.order, &f.indices)?;
    PcExpansion::new(basis, f.coeffs.clone()).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_pce(path: &Path, e: &PcExpansion) -> Result<()> {
    write_json(path, &to_file(e))
}

pub fn read_pce(path: &Path) -> Result<PcExpansion> {
    from_file(path, &read_json(path)?)
}

pub fn write_pce_trajectory(path: &Path, traj: &PceTrajectory, times: &[f64]) -> Result<()> {
    if times.len() != traj.n_times() {
        return Err(Error::format(path, "time list does not match the coefficient rows"));
    }
    let c = traj.coeffs();
    write_json(
        path,
        &TrajectoryFile {
            np: traj.basis().np(),
            order: traj.basis().order(),
            indices: indices(traj.basis()),
            times: times.to_vec(),
            coeffs: (0..c.rows()).map(|m| c.row(m).to_vec()).collect(),
        },
    )
}

pub fn read_pce_trajectory(path: &Path) -> Result<(Vec<f64>, PceTrajectory)> {
    let f: TrajectoryFile = read_json(path)?;
    let basis = basis_for(path, f.np, f.order, &f.indices)?;
    let p = basis.len();
    if f.coeffs.len() != f.times.len() || f.coeffs.iter().any(|r| r.len() != p) {
        return Err(Error::format(path, "coefficient table does not match times x basis"));
    }
    let m = Matrix::from_row_major(f.times.len(), p, f.coeffs.concat())?;
    let traj = PceTrajectory::new(basis, m).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((f.times, traj))
}

pub fn write_surrogate(path: &Path, s: &KlSurrogate, eigenvalues: &[f64]) -> Result<()> {
    let v = s.vectors();
    if eigenvalues.len() != s.n_modes() {
        return Err(Error::format(path, "one eigenvalue per mode is required"));
    }
    write_json(
        path,
        &SurrogateFile {
            time_rule: match s.time_rule().kind() {
                TimeRuleKind::Trapezoid => "trapezoid".into(),
                TimeRuleKind::Custom => "custom".into(),
            },
            times: s.time_rule().nodes().to_vec(),
            time_weights: s.time_rule().weights().to_vec(),
            mean: s.mean().to_vec(),
            eigenvalues: eigenvalues.to_vec(),
            eigenvectors: (0..v.rows()).map(|i| v.row(i).to_vec()).collect(),
            modes: s.modes().iter().map(to_file).collect(),
        },
    )
}

pub fn read_surrogate(path: &Path) -> Result<KlSurrogate> {
    let f: SurrogateFile = read_json(path)?;
    let nt = f.times.len();
    if f.eigenvectors.iter().any(|r| r.len() != nt) || f.eigenvectors.len() != f.eigenvalues.len() {
        return Err(Error::format(path, "eigenvector table does not match the grid"));
    }
    let rule = match f.time_rule.as_str() {
        "trapezoid" => TimeRule::trapezoid(&f.times),
        "custom" => TimeRule::custom(f.times, f.time_weights.clone()),
        k => return Err(Error::format(path, format!("unknown time rule `{k}`"))),
    }
    .map_err(|e| Error::format(path, e.to_string()))?;
    if rule.weights() != f.time_weights.as_slice() {
        return Err(Error::format(path, "time weights do not match the rule"));
    }
    let vectors = Matrix::from_row_major(f.eigenvalues.len(), nt, f.eigenvectors.concat())?;
    let trace = f.eigenvalues.iter().sum();
    let spectrum = Spectrum::from_parts(f.eigenvalues, vectors, rule.weights().to_vec(), trace)?;
    let modes = f.modes.iter().map(|m| from_file(path, m)).collect::<Result<Vec<_>>>()?;
    KlSurrogate::new(rule, f.mean, &spectrum, modes).map_err(|e| Error::format(path, e.to_string()))
}
