//! Study configuration (TOML) and its validation.

use std::path::{Path, PathBuf};

use gensobol_core::kl::EigenMethod;
use gensobol_core::sobol::{Denominator, Method};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelConfig,
    /// Required except for `external-table`, whose grid comes from the table.
    pub time: Option<TimeConfig>,
    /// Required except for `external-table`.
    pub sampling: Option<SamplingConfig>,
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub cs: CsSettings,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub spectrum: SpectrumSettings,
    /// Parameter subsets (by name); defaults to all singletons.
    pub targets: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub window: WindowSettings,
    pub fixing: Option<FixingSettings>,
    pub bands: Option<BandSettings>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Oscillator,
    Cholera,
    ExternalTable,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Oscillator => "oscillator",
            ModelId::Cholera => "cholera",
            ModelId::ExternalTable => "external-table",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: ModelId,
    /// Expected parameter count; checked against the model when given.
    pub np: Option<usize>,
    /// Ensemble file of an external table.
    pub path: Option<PathBuf>,
    /// ODE tolerances (cholera).
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// `T`; with `dt` gives the uniform grid `0, dt, .., T`.
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    /// Explicit increasing grid (trapezoid weights); excludes `horizon`/`dt`.
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    Mc,
    Tensor,
    Smolyak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub scheme: SamplingScheme,
    /// Sample count (`mc`).
    pub n: Option<usize>,
    /// Seed (`mc`).
    pub seed: Option<u64>,
    /// Gauss-Legendre points per dimension (`tensor`).
    pub points: Option<usize>,
    /// Sparse-grid level (`smolyak`).
    pub level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub method: String,
    /// `N_ord`; required by every PCE-based method.
    pub order: Option<usize>,
    /// Fixed number of KL modes.
    pub nkl: Option<usize>,
    /// Smallest `N_kl` reaching this truncation ratio (alternative to `nkl`).
    pub variance_ratio: Option<f64>,
    /// Spectral denominator: `eigenvalues` (default) or `surrogate`.
    pub denominator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsSettings {
    /// `"auto"` (cross-validation) or a fixed radius.
    pub tau: TauSetting,
    pub folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub grid: usize,
    pub seed: u64,
    /// Pointwise CS: `freeze` (validate once) or `per-node`.
    pub tau_policy: String,
    /// Node used by the `freeze` policy; defaults to `T`.
    pub freeze_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSetting {
    Named(String),
    Fixed(f64),
}

impl Default for CsSettings {
    fn default() -> Self {
        Self {
            tau: TauSetting::Named("auto".into()),
            folds: 5,
            tol: 1e-10,
            max_iter: 50_000,
            grid: 14,
            seed: 0,
            tau_policy: "freeze".into(),
            freeze_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSettings {
    pub n: usize,
    pub seed: u64,
    pub bootstrap: usize,
    pub chunk: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n: 10_000, seed: 0, bootstrap: 200, chunk: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSettings {
    /// Eigenpairs to compute and report.
    pub count: usize,
    /// `auto`, `dense` or `lanczos`.
    pub eigen: String,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self { count: 20, eigen: "auto".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSettings {
    /// Smallest window end; defaults to the first node with positive variance.
    pub tau_min: Option<f64>,
    /// Use every `stride`-th grid node as a window end.
    pub stride: usize,
}

impl Default for WindowSettings {
    fn default() -> Self {
        Self { tau_min: None, stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixingSettings {
    /// Variables kept random; the rest are fixed.
    pub keep: Vec<String>,
    #[serde(default = "default_n_nominal")]
    pub n_nominal: usize,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    #[serde(default = "default_n_ref")]
    pub n_ref: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps_levels")]
    pub eps_levels: Vec<f64>,
}

impl FixingSettings {
    /// Defaults for everything except the kept variables.
    pub fn keeping(keep: Vec<String>) -> Self {
        Self {
            keep,
            n_nominal: default_n_nominal(),
            n_eval: default_n_eval(),
            n_ref: default_n_ref(),
            seed: 0,
            eps_levels: default_eps_levels(),
        }
    }
}

fn default_n_nominal() -> usize {
    200
}
fn default_n_eval() -> usize {
    2000
}
fn default_n_ref() -> usize {
    100_000
}
fn default_eps_levels() -> Vec<f64> {
    vec![0.1, 0.25, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSettings {
    pub keep: Vec<String>,
    #[serde(default = "default_band_n")]
    pub n: usize,
    #[serde(default = "default_percentiles")]
    pub percentiles: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    /// Nominal `xi` for the fixed variables; defaults to zeros (nominal parameters).
    pub nominal: Option<Vec<f64>>,
    /// Coverage dilation as a fraction of the full band width.
    #[serde(default = "default_dilation")]
    pub dilation: f64,
}

impl BandSettings {
    /// Defaults for everything except the kept variables.
    pub fn keeping(keep: Vec<String>) -> Self {
        Self {
            keep,
            n: default_band_n(),
            percentiles: default_percentiles(),
            seed: 0,
            nominal: None,
            dilation: default_dilation(),
        }
    }
}

fn default_band_n() -> usize {
    2000
}
fn default_percentiles() -> [f64; 2] {
    [2.0, 98.0]
}
fn default_dilation() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Artifact directory; relative paths are taken under the output root.
    pub dir: PathBuf,
    /// Also export the ensemble as CSV.
    pub ensemble_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), ensemble_csv: false }
    }
}

impl StudyConfig {
    /// Parse and validate a config file. Returns the config and the SHA-256 of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigParse { path: path.to_path_buf(), message: e.to_string() })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::ConfigParse { message, .. } => Error::ConfigParse { path: path.to_path_buf(), message },
            e => e,
        })?;
        if let (Some(p), Some(dir)) = (cfg.model.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok((cfg, sha256_hex(text.as_bytes())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text)
            .map_err(|e| Error::ConfigParse { path: PathBuf::from("<config>"), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn method(&self) -> Method {
        Method::parse(&self.pipeline.method).expect("validated method")
    }

    pub fn eigen_method(&self) -> EigenMethod {
        match self.spectrum.eigen.as_str() {
            "dense" => EigenMethod::Dense,
            "lanczos" => EigenMethod::Lanczos,
            _ => EigenMethod::Auto,
        }
    }

    pub fn denominator(&self) -> Denominator {
        self.pipeline.denominator.as_deref().and_then(Denominator::parse).unwrap_or_default()
    }

    /// Check internal consistency before any model run.
    pub fn validate(&self) -> Result<()> {
        let method = Method::parse(&self.pipeline.method).ok_or_else(|| {
            Error::config(
                "pipeline.method",
                format!(
                    "unknown method `{}` (expected pointwise-nisp, pointwise-cs, spectral-nisp, spectral-cs or mc)",
                    self.pipeline.method
                ),
            )
        })?;
        let external = self.model.id == ModelId::ExternalTable;
        if external {
            if self.model.path.is_none() {
                return Err(Error::config("model.path", "external-table needs the path of an ensemble file"));
            }
            if self.time.is_some() || self.sampling.is_some() {
                return Err(Error::config(
                    "time/sampling",
                    "external-table takes its grid and samples from the table; remove these sections",
                ));
            }
            if method == Method::Mc {
                return Err(Error::config(
                    "pipeline.method",
                    "mc needs new model evaluations, which an external table cannot provide",
                ));
            }
            if self.fixing.is_some() || self.bands.is_some() {
                return Err(Error::config(
                    "fixing/bands",
                    "fixing studies evaluate the model at new points; not available for external-table",
                ));
            }
        } else {
            if self.model.path.is_some() {
                return Err(Error::config("model.path", "only external-table models read a path"));
            }
            let time = self.time.as_ref().ok_or_else(|| Error::config("time", "missing [time] section"))?;
            time.validate()?;
            let s = self.sampling.as_ref().ok_or_else(|| Error::config("sampling", "missing [sampling] section"))?;
            s.validate()?;
            if method.needs_quadrature() && s.scheme == SamplingScheme::Mc {
                return Err(Error::config(
                    "pipeline.method",
                    format!(
                        "{} projects onto the basis with quadrature weights and needs sampling.scheme = \"tensor\" or \"smolyak\", not \"mc\"",
                        method.as_str()
                    ),
                ));
            }
        }
        if let Some(np) = self.model.np {
            let expect = match self.model.id {
                ModelId::Oscillator => Some(3),
                ModelId::Cholera => Some(8),
                ModelId::ExternalTable => None,
            };
            if expect.is_some_and(|e| e != np) {
                return Err(Error::config(
                    "model.np",
                    format!("{} has {} parameters, config says {np}", self.model.id.as_str(), expect.unwrap()),
                ));
            }
        }
        for (field, v) in [("model.abs_tol", self.model.abs_tol), ("model.rel_tol", self.model.rel_tol)] {
            if let Some(v) = v {
                if self.model.id != ModelId::Cholera {
                    return Err(Error::config(field, "ODE tolerances apply to the cholera model only"));
                }
                if !(v > 0.0) {
                    return Err(Error::config(field, "must be positive"));
                }
            }
        }
        if method != Method::Mc {
            match self.pipeline.order {
                None => return Err(Error::config("pipeline.order", "PCE methods need a polynomial order")),
                Some(0) => return Err(Error::config("pipeline.order", "order must be at least 1")),
                _ => {}
            }
        }
        if method.is_spectral() {
            match (self.pipeline.nkl, self.pipeline.variance_ratio) {
                (Some(_), Some(_)) => {
                    return Err(Error::config("pipeline.nkl", "give either nkl or variance_ratio, not both"))
                }
                (None, None) => {
                    return Err(Error::config("pipeline.nkl", "spectral methods need nkl or variance_ratio"))
                }
                (Some(0), _) => return Err(Error::config("pipeline.nkl", "nkl must be at least 1")),
                (_, Some(r)) if !(r > 0.0 && r <= 1.0) => {
                    return Err(Error::config("pipeline.variance_ratio", "must be in (0, 1]"))
                }
                _ => {}
            }
            if let Some(n) = self.pipeline.nkl {
                if n > self.spectrum.count {
                    return Err(Error::config(
                        "spectrum.count",
                        format!("nkl = {n} needs at least that many eigenpairs (count = {})", self.spectrum.count),
                    ));
                }
            }
        }
        if let Some(d) = &self.pipeline.denominator {
            if Denominator::parse(d).is_none() {
                return Err(Error::config("pipeline.denominator", "expected `eigenvalues` or `surrogate`"));
            }
        }
        if !["auto", "dense", "lanczos"].contains(&self.spectrum.eigen.as_str()) {
            return Err(Error::config("spectrum.eigen", "expected `auto`, `dense` or `lanczos`"));
        }
        if self.spectrum.count == 0 {
            return Err(Error::config("spectrum.count", "must be at least 1"));
        }
        self.cs.validate()?;
        if self.mc.n < 100 {
            return Err(Error::config("mc.n", "Monte Carlo needs at least 100 samples"));
        }
        if self.mc.chunk == 0 {
            return Err(Error::config("mc.chunk", "must be positive"));
        }
        if self.window.stride == 0 {
            return Err(Error::config("window.stride", "must be positive"));
        }
        if let Some(f) = &self.fixing {
            if f.keep.is_empty() {
                return Err(Error::config("fixing.keep", "keep at least one variable"));
            }
            if f.n_nominal == 0 || f.n_eval == 0 {
                return Err(Error::config("fixing", "n_nominal and n_eval must be positive"));
            }
            if f.n_ref < 100 {
                return Err(Error::config("fixing.n_ref", "reference Monte Carlo needs at least 100 samples"));
            }
            if f.eps_levels.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
                return Err(Error::config("fixing.eps_levels", "levels must be in (0, 1]"));
            }
        }
        if let Some(b) = &self.bands {
            if b.keep.is_empty() {
                return Err(Error::config("bands.keep", "keep at least one variable"));
            }
            let [lo, hi] = b.percentiles;
            if !(0.0 <= lo && lo <= hi && hi <= 100.0) {
                return Err(Error::config("bands.percentiles", "need 0 <= lo <= hi <= 100"));
            }
            if b.n == 0 {
                return Err(Error::config("bands.n", "must be positive"));
            }
            if !(b.dilation >= 0.0) {
                return Err(Error::config("bands.dilation", "must be nonnegative"));
            }
            if b.nominal.as_ref().is_some_and(|v| v.iter().any(|x| !(x.abs() <= 1.0))) {
                return Err(Error::config("bands.nominal", "nominal xi values must lie in [-1, 1]"));
            }
        }
        if let Some(t) = &self.targets {
            if t.is_empty() || t.iter().any(|u| u.is_empty()) {
                return Err(Error::config("targets", "subsets must be nonempty"));
            }
        }
        Ok(())
    }

    /// Hash of the settings that determine the ensemble.
    pub fn ensemble_key(&self) -> String {
        let key = (
            &self.model.id,
            &self.model.np,
            &self.model.path,
            &self.model.abs_tol,
            &self.model.rel_tol,
            &self.time,
            &self.sampling,
        );
        sha256_hex(serde_json::to_string(&key).expect("serializable").as_bytes())
    }
}

impl TimeConfig {
    fn validate(&self) -> Result<()> {
        match (&self.grid, self.horizon, self.dt) {
            (Some(g), None, None) => {
                if g.len() < 2 || g.windows(2).any(|w| !(w[1] > w[0])) || !(g[0] >= 0.0) {
                    return Err(Error::config(
                        "time.grid",
                        "grid must have at least two strictly increasing nonnegative nodes",
                    ));
                }
            }
            (None, Some(h), Some(dt)) => {
                if !(h > 0.0 && dt > 0.0) {
                    return Err(Error::config("time", "horizon and dt must be positive"));
                }
                let steps = (h / dt).round();
                if (steps * dt - h).abs() > 1e-9 * h {
                    return Err(Error::config("time.dt", format!("horizon {h} is not a multiple of dt {dt}")));
                }
            }
            (Some(_), _, _) => return Err(Error::config("time.grid", "give either grid or horizon + dt")),
            _ => return Err(Error::config("time", "need horizon and dt, or an explicit grid")),
        }
        Ok(())
    }
}

impl SamplingConfig {
    fn validate(&self) -> Result<()> {
        let need = |field: &str, v: Option<usize>| -> Result<usize> {
            match v {
                Some(n) if n > 0 => Ok(n),
                Some(_) => Err(Error::config(format!("sampling.{field}"), "must be positive")),
                None => Err(Error::config(
                    format!("sampling.{field}"),
                    format!("required for scheme {:?}", self.scheme).to_lowercase(),
                )),
            }
        };
        let stray = |field: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::config(
                    format!("sampling.{field}"),
                    format!("not used by scheme {:?}", self.scheme).to_lowercase(),
                ))
            } else {
                Ok(())
            }
        };
        match self.scheme {
            SamplingScheme::Mc => {
                need("n", self.n)?;
                if self.n == Some(1) {
                    return Err(Error::config("sampling.n", "Monte Carlo covariance needs at least 2 samples"));
                }
                stray("points", self.points.is_some())?;
                stray("level", self.level.is_some())?;
            }
            SamplingScheme::Tensor => {
                need("points", self.points)?;
                stray("n", self.n.is_some())?;
                stray("seed", self.seed.is_some())?;
                stray("level", self.level.is_some())?;
            }
            SamplingScheme::Smolyak => {
                need("level", self.level)?;
                stray("n", self.n.is_some())?;
                stray("seed", self.seed.is_some())?;
                stray("points", self.points.is_some())?;
            }
        }
        Ok(())
    }
}

impl CsSettings {
    fn validate(&self) -> Result<()> {
        match &self.tau {
            TauSetting::Named(s) if s == "auto" => {}
            TauSetting::Named(s) => {
                return Err(Error::config("cs.tau", format!("expected \"auto\" or a number, got `{s}`")))
            }
            TauSetting::Fixed(t) if !(*t >= 0.0) => return Err(Error::config("cs.tau", "radius must be nonnegative")),
            TauSetting::Fixed(_) => {}
        }
        if self.folds < 2 {
            return Err(Error::config("cs.folds", "cross-validation needs at least 2 folds"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("cs.tol", "must be positive"));
        }
        if self.max_iter == 0 || self.grid < 2 {
            return Err(Error::config("cs", "max_iter must be positive and grid at least 2"));
        }
        if !["freeze", "per-node"].contains(&self.tau_policy.as_str()) {
            return Err(Error::config("cs.tau_policy", "expected `freeze` or `per-node`"));
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
