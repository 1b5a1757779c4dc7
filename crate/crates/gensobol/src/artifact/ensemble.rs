use std::path::Path;

use gensobol_core::ensemble::{Ensemble, SampleScheme, SampleSet};
use gensobol_core::linalg::Matrix;
use gensobol_core::quadrature::{TimeRule, TimeRuleKind};
use serde::{Deserialize, Serialize};

use super::{atomic_write, read_blob, split_blocks, write_blob};
use crate::error::{Error, Result};

const FORMAT: &str = "gensobol-ensemble";

/// Header line of an ensemble file. The payload is the sample points
/// (`N x Np`), the quadrature weights (`N`, quadrature only) and the
/// trajectories (`N x N_t`), all row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHeader {
    pub format: String,
    pub model: String,
    #[serde(rename = "Np")]
    pub np: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: Option<u64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: Option<f64>,
    /// `mc` or `quadrature`.
    pub scheme: String,
    pub param_names: Vec<String>,
    pub times: Vec<f64>,
    /// Present only for non-trapezoid time rules.
    pub time_weights: Option<Vec<f64>>,
    /// Hash of the settings that produced the ensemble.
    pub key: Option<String>,
}

pub fn write_ensemble(
    path: &Path,
    ensemble: &Ensemble,
    model: &str,
    param_names: &[String],
    dt: Option<f64>,
    key: Option<String>,
) -> Result<()> {
    if ensemble.is_centered() {
        return Err(Error::format(path, "only raw (uncentered) ensembles are stored"));
    }
    let samples = ensemble.samples();
    let rule = ensemble.time_rule();
    let (scheme, weights) = match samples.scheme() {
        SampleScheme::MonteCarlo { .. } => ("mc", None),
        SampleScheme::Quadrature { weights } => ("quadrature", Some(weights.as_slice())),
    };
    let header = EnsembleHeader {
        format: FORMAT.into(),
        model: model.into(),
        np: samples.dim(),
        n: samples.len(),
        seed: samples.seed(),
        horizon: rule.horizon(),
        dt,
        scheme: scheme.into(),
        param_names: param_names.to_vec(),
        times: rule.nodes().to_vec(),
        time_weights: match rule.kind() {
            TimeRuleKind::Trapezoid => None,
            TimeRuleKind::Custom => Some(rule.weights().to_vec()),
        },
        key,
    };
    let mut blocks: Vec<&[f64]> = vec![samples.points()];
    if let Some(w) = weights {
        blocks.push(w);
    }
    blocks.push(ensemble.trajectories().as_slice());
    write_blob(path, &header, &blocks)
}

pub fn read_ensemble(path: &Path) -> Result<(EnsembleHeader, Ensemble)> {
    let (h, data): (EnsembleHeader, Vec<f64>) = read_blob(path)?;
    if h.format != FORMAT {
        return Err(Error::format(path, format!("format tag `{}` is not `{FORMAT}`", h.format)));
    }
    if h.param_names.len() != h.np {
        return Err(Error::format(path, "param_names length differs from Np"));
    }
    let nt = h.times.len();
    let rule = match &h.time_weights {
        None => TimeRule::trapezoid(&h.times),
        Some(w) => TimeRule::custom(h.times.clone(), w.clone()),
    }
    .map_err(|e| Error::format(path, format!("time grid: {e}")))?;
    let quad = match h.scheme.as_str() {
        "mc" => false,
        "quadrature" => true,
        s => return Err(Error::format(path, format!("unknown scheme `{s}`"))),
    };
    let mut lens = vec![h.n * h.np];
    if quad {
        lens.push(h.n);
    }
    lens.push(h.n * nt);
    let blocks = split_blocks(path, &data, &lens)?;
    let scheme = if quad {
        SampleScheme::Quadrature { weights: blocks[1].to_vec() }
    } else {
        SampleScheme::MonteCarlo {
            seed: h.seed.ok_or_else(|| Error::format(path, "Monte Carlo ensemble without a seed"))?,
        }
    };
    let samples =
        SampleSet::from_parts(h.np, blocks[0].to_vec(), scheme).map_err(|e| Error::format(path, e.to_string()))?;
    let traj = Matrix::from_row_major(h.n, nt, blocks[blocks.len() - 1].to_vec())?;
    let ensemble = Ensemble::new(rule, samples, traj).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((h, ensemble))
}

/// Export with `t` in the first column and one column per sample.
pub fn write_ensemble_csv(path: &Path, ensemble: &Ensemble) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["t".to_string()];
    head.extend((0..ensemble.n_samples()).map(|k| format!("s{k}")));
    w.write_record(&head).map_err(|e| Error::format(path, e.to_string()))?;
    for (m, t) in ensemble.time_rule().nodes().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend((0..ensemble.n_samples()).map(|k| ensemble.value(m, k).to_string()));
        w.write_record(&row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

/// Times and the `N x N_t` trajectory matrix of an exported CSV.
pub fn read_ensemble_csv(path: &Path) -> Result<(Vec<f64>, Matrix)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let n = r.headers().map_err(|e| Error::format(path, e.to_string()))?.len().saturating_sub(1);
    let mut times = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::format(path, format!("`{s}`: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != n + 1 {
            return Err(Error::format(path, "ragged row"));
        }
        times.push(vals[0]);
        cols.push(vals[1..].to_vec());
    }
    let nt = times.len();
    let m = Matrix::from_fn(n, nt, |k, t| cols[t][k]);
    Ok((times, m))
}
