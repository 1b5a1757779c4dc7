use std::path::Path;

use gensobol_core::sobol::{
    Bands, Diagnostics, FixingReport, IndexEstimate, Method, PointwiseVariances, SobolReport, Subset, Violation,
    WindowPoint,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{atomic_write, read_json, write_json};
use crate::error::{Error, Result};

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::format(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| Error::format(path, e.to_string()))).collect()
}

/// Parameter names of a subset joined by `+`.
pub fn subset_label(u: &Subset, names: &[String]) -> String {
    u.members().iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SobolRow {
    pub variable: String,
    pub S_first: f64,
    pub S_tot: f64,
    pub method: String,
    pub T: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EntryJson {
    pub variable: String,
    /// Zero-based parameter indices of the subset.
    pub members: Vec<usize>,
    pub S_first: f64,
    pub S_tot: f64,
    pub S_first_se: Option<f64>,
    pub S_tot_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub nkl: Option<usize>,
    pub order: Option<usize>,
    pub n_samples: usize,
    pub seed: Option<u64>,
    pub variance_ratio: Option<f64>,
    pub denominator: f64,
    /// `eigenvalues` or `surrogate` on the spectral path.
    pub spectral_denominator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagJson {
    pub variable: String,
    pub violation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolJson {
    pub method: String,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub param_names: Vec<String>,
    pub report_eps: f64,
    pub entries: Vec<EntryJson>,
    pub diagnostics: DiagnosticsJson,
    pub flags: Vec<FlagJson>,
}

fn violation_name(v: Violation) -> &'static str {
    match v {
        Violation::NegativeFirst => "negative-first",
        Violation::FirstAboveTotal => "first-above-total",
        Violation::TotalAboveOne => "total-above-one",
    }
}

impl SobolJson {
    pub fn from_report(r: &SobolReport, names: &[String], spectral_denominator: Option<&str>) -> Self {
        let d = &r.diagnostics;
        Self {
            method: r.method.as_str().into(),
            horizon: r.horizon,
            param_names: names.to_vec(),
            report_eps: r.report_eps,
            entries: r
                .entries
                .iter()
                .map(|e| EntryJson {
                    variable: subset_label(&e.target, names),
                    members: e.target.members(),
                    S_first: e.first,
                    S_tot: e.total,
                    S_first_se: e.first_se,
                    S_tot_se: e.total_se,
                })
                .collect(),
            diagnostics: DiagnosticsJson {
                nkl: d.nkl,
                order: d.order,
                n_samples: d.n_samples,
                seed: d.seed,
                variance_ratio: d.variance_ratio,
                denominator: d.denominator,
                spectral_denominator: spectral_denominator.map(String::from),
            },
            flags: r
                .flags()
                .into_iter()
                .map(|(i, v)| FlagJson {
                    variable: subset_label(&r.entries[i].target, names),
                    violation: violation_name(v).into(),
                })
                .collect(),
        }
    }

    pub fn to_report(&self) -> Result<SobolReport> {
        let method = Method::parse(&self.method)
            .ok_or_else(|| Error::format("sobol.json", format!("unknown method `{}`", self.method)))?;
        let np = self.param_names.len();
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut est = IndexEstimate::new(Subset::new(np, &e.members)?, e.S_first, e.S_tot);
                est.first_se = e.S_first_se;
                est.total_se = e.S_tot_se;
                Ok(est)
            })
            .collect::<Result<Vec<_>>>()?;
        let d = &self.diagnostics;
        let mut r = SobolReport::new(
            method,
            self.horizon,
            entries,
            Diagnostics {
                nkl: d.nkl,
                order: d.order,
                n_samples: d.n_samples,
                seed: d.seed,
                variance_ratio: d.variance_ratio,
                denominator: d.denominator,
            },
        );
        r.report_eps = self.report_eps;
        Ok(r)
    }
}

/// Write the report as `csv_path` (one row per subset) and `json_path` (with diagnostics).
pub fn write_sobol(
    csv_path: &Path,
    json_path: &Path,
    r: &SobolReport,
    names: &[String],
    spectral_denominator: Option<&str>,
) -> Result<()> {
    let rows: Vec<SobolRow> = r
        .entries
        .iter()
        .map(|e| SobolRow {
            variable: subset_label(&e.target, names),
            S_first: e.first,
            S_tot: e.total,
            method: r.method.as_str().into(),
            T: r.horizon,
            seed: r.diagnostics.seed,
        })
        .collect();
    write_csv(csv_path, &rows)?;
    write_json(json_path, &SobolJson::from_report(r, names, spectral_denominator))
}

pub fn read_sobol_csv(path: &Path) -> Result<Vec<SobolRow>> {
    read_csv(path)
}

pub fn read_sobol_json(path: &Path) -> Result<SobolJson> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct WindowRow {
    pub tau: f64,
    pub variable: String,
    pub S_tot: f64,
}

/// Long format: one row per `(tau, subset)`.
pub fn write_window_csv(path: &Path, points: &[WindowPoint], names: &[String]) -> Result<()> {
    let rows: Vec<WindowRow> = points
        .iter()
        .flat_map(|p| {
            p.entries.iter().map(move |e| WindowRow {
                tau: p.tau,
                variable: subset_label(&e.target, names),
                S_tot: e.total,
            })
        })
        .collect();
    write_csv(path, &rows)
}

pub fn read_window_csv(path: &Path) -> Result<Vec<WindowRow>> {
    read_csv(path)
}

/// Pointwise-in-time indices; undefined (zero-variance) nodes have empty index cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PointwiseRow {
    pub t: f64,
    pub variable: String,
    pub variance: f64,
    pub S_first: Option<f64>,
    pub S_tot: Option<f64>,
}

pub fn write_pointwise_csv(path: &Path, times: &[f64], pv: &PointwiseVariances, names: &[String]) -> Result<()> {
    let per_target: Vec<_> = (0..pv.targets.len()).map(|j| pv.indices(j)).collect();
    let mut rows = Vec::with_capacity(times.len() * pv.targets.len());
    for (m, &t) in times.iter().enumerate() {
        for (u, idx) in pv.targets.iter().zip(&per_target) {
            rows.push(PointwiseRow {
                t,
                variable: subset_label(u, names),
                variance: pv.variance[m],
                S_first: idx.first[m],
                S_tot: idx.total[m],
            });
        }
    }
    write_csv(path, &rows)
}

pub fn read_pointwise_csv(path: &Path) -> Result<Vec<PointwiseRow>> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixingRow {
    pub nominal: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovJson {
    pub eps: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixingJson {
    pub kept: Vec<String>,
    pub fixed: Vec<String>,
    pub mean_error: f64,
    pub reference_total: f64,
    pub reference_se: Option<f64>,
    pub markov: Vec<MarkovJson>,
    /// Values of the fixed coordinates, one row per nominal.
    pub nominals: Vec<Vec<f64>>,
}

/// `csv_path`: per-nominal errors; `json_path`: summary with the Markov check.
pub fn write_fixing(csv_path: &Path, json_path: &Path, r: &FixingReport, names: &[String]) -> Result<()> {
    let rows: Vec<FixingRow> =
        r.errors.iter().enumerate().map(|(nominal, &error)| FixingRow { nominal, error }).collect();
    write_csv(csv_path, &rows)?;
    let label = |u: &Subset| u.members().iter().map(|&i| names[i].clone()).collect();
    write_json(
        json_path,
        &FixingJson {
            kept: label(&r.kept),
            fixed: label(&r.fixed),
            mean_error: r.mean_error,
            reference_total: r.reference_total,
            reference_se: r.reference_se,
            markov: r.markov.iter().map(|m| MarkovJson { eps: m.eps, rate: m.rate }).collect(),
            nominals: r.nominals.clone(),
        },
    )
}

pub fn read_fixing_json(path: &Path) -> Result<FixingJson> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub t: f64,
    pub full_lo: f64,
    pub full_hi: f64,
    pub reduced_lo: f64,
    pub reduced_hi: f64,
}

pub fn write_bands_csv(path: &Path, b: &Bands) -> Result<()> {
    let rows: Vec<BandRow> = (0..b.times.len())
        .map(|m| BandRow {
            t: b.times[m],
            full_lo: b.full_lo[m],
            full_hi: b.full_hi[m],
            reduced_lo: b.reduced_lo[m],
            reduced_hi: b.reduced_hi[m],
        })
        .collect();
    write_csv(path, &rows)
}

pub fn read_bands_csv(path: &Path) -> Result<Vec<BandRow>> {
    read_csv(path)
}
