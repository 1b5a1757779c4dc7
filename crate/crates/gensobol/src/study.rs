//! Study orchestration: builds the model from a config, produces or reuses
//! artifacts, and records provenance in `run.log`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gensobol_core::ensemble::{draw_samples, evaluate_ensemble, Ensemble, SampleSet};
use gensobol_core::kl::{Spectrum, NEGATIVE_TOL};
use gensobol_core::models::{CholeraModel, OdeConfig, Oscillator, Process};
use gensobol_core::pce::{CsConfig, Tau};
use gensobol_core::quadrature::{gauss_legendre, smolyak_rule, tensor_rule, TimeRule};
use gensobol_core::sobol::pipeline::{
    ensemble_spectrum, pointwise_cs, pointwise_nisp, spectral_from_spectrum, spectral_window, ModeFit, NklChoice,
    SpectralOutput, TauPolicy,
};
use gensobol_core::sobol::{
    band_agreement, band_coverage, fixing_error, generalized_mc, growing_window, pointwise_variances_from_pce,
    reduced_model_bands, singletons, window_taus, BandCoverage, Bands, FixingConfig, FixingReport, McConfig, Method,
    PointwiseVariances, SobolReport, Subset, WindowPoint, WindowSource,
};
use serde::{Deserialize, Serialize};

use crate::artifact::{
    self, read_ensemble, read_json, read_spectrum, write_bands_csv, write_ensemble, write_ensemble_csv, write_fixing,
    write_json, write_pce_trajectory, write_pointwise_csv, write_sobol, write_spectrum, write_surrogate,
    write_window_csv,
};
use crate::config::{ModelId, SamplingScheme, StudyConfig, TauSetting};
use crate::error::{Error, Result};
use crate::external::ExternalTableModel;
use crate::parallel::Parallel;

/// Environment variable naming the root under which relative output directories live.
pub const OUT_ENV: &str = "GENSOBOL_OUT";

pub const ENSEMBLE_FILE: &str = "ensemble.gse";
pub const ENSEMBLE_CSV: &str = "ensemble.csv";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const SPECTRUM_BIN: &str = "spectrum.bin";
pub const PCE_FILE: &str = "pce.json";
pub const SURROGATE_FILE: &str = "surrogate.json";
pub const SOBOL_CSV: &str = "sobol.csv";
pub const SOBOL_JSON: &str = "sobol.json";
pub const POINTWISE_CSV: &str = "pointwise.csv";
pub const WINDOW_CSV: &str = "window.csv";
pub const FIXING_CSV: &str = "fixing.csv";
pub const FIXING_JSON: &str = "fixing.json";
pub const BANDS_CSV: &str = "bands.csv";
pub const BANDS_JSON: &str = "bands.json";
pub const MANIFEST: &str = "manifest.json";
pub const LOG_FILE: &str = "run.log";

/// Artifact name -> key of the settings that produced it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    keys: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsSummary {
    pub kept: Vec<String>,
    pub nominal: Vec<f64>,
    pub dilation: f64,
    /// One-sided: reduced band inside the dilated full band.
    pub covered: bool,
    pub first_uncovered: Option<f64>,
    /// Two-sided: reduced percentiles within `dilation` of the full ones.
    pub agrees: bool,
    pub first_disagreement: Option<f64>,
}

pub struct Study {
    cfg: StudyConfig,
    config_hash: String,
    dir: PathBuf,
    force: bool,
    log: Vec<String>,
    manifest: Manifest,
    table: Option<ExternalTableModel>,
}

/// Artifact directory: `--out` when given, otherwise `output.dir` under `$GENSOBOL_OUT` (or the cwd).
pub fn resolve_out_dir(cfg: &StudyConfig, out: Option<&Path>) -> PathBuf {
    if let Some(o) = out {
        return o.to_path_buf();
    }
    if cfg.output.dir.is_absolute() {
        return cfg.output.dir.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) => PathBuf::from(root).join(&cfg.output.dir),
        None => cfg.output.dir.clone(),
    }
}

fn key_of<T: Serialize>(v: &T) -> String {
    crate::config::sha256_hex(serde_json::to_string(v).expect("serializable").as_bytes())
}

impl Study {
    pub fn new(cfg: StudyConfig, config_hash: String, dir: PathBuf, force: bool) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let manifest = read_json(&dir.join(MANIFEST)).unwrap_or_default();
        let table = match (&cfg.model.id, &cfg.model.path) {
            (ModelId::ExternalTable, Some(p)) => Some(ExternalTableModel::load(p)?),
            _ => None,
        };
        let s = Self { cfg, config_hash, dir, force, log: Vec::new(), manifest, table };
        if let (Some(t), Some(np)) = (&s.table, s.cfg.model.np) {
            if t.header().np != np {
                return Err(Error::config(
                    "model.np",
                    format!("table has {} parameters, config says {np}", t.header().np),
                ));
            }
        }
        s.check_names()?;
        Ok(s)
    }

    pub fn config(&self) -> &StudyConfig {
        &self.cfg
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn ode(&self) -> OdeConfig {
        let d = OdeConfig::default();
        OdeConfig {
            abs_tol: self.cfg.model.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.cfg.model.rel_tol.unwrap_or(d.rel_tol),
            ..d
        }
    }

    pub fn model(&self) -> Box<dyn Process + '_> {
        match self.cfg.model.id {
            ModelId::Oscillator => Box::new(Oscillator),
            ModelId::Cholera => Box::new(CholeraModel { ode: self.ode() }),
            ModelId::ExternalTable => Box::new(self.table.as_ref().expect("loaded table").clone()),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        self.model().param_names()
    }

    fn subset_of(&self, field: &str, names: &[String]) -> Result<Subset> {
        let all = self.param_names();
        let idx = names
            .iter()
            .map(|n| {
                all.iter()
                    .position(|a| a == n)
                    .ok_or_else(|| Error::config(field, format!("unknown variable `{n}` (known: {})", all.join(", "))))
            })
            .collect::<Result<Vec<_>>>()?;
        Subset::new(all.len(), &idx).map_err(|e| Error::config(field, e.to_string()))
    }

    pub fn targets(&self) -> Result<Vec<Subset>> {
        match &self.cfg.targets {
            None => Ok(singletons(self.param_names().len())),
            Some(t) => t.iter().map(|u| self.subset_of("targets", u)).collect(),
        }
    }

    fn check_names(&self) -> Result<()> {
        self.targets()?;
        if let Some(f) = &self.cfg.fixing {
            self.subset_of("fixing.keep", &f.keep)?;
        }
        if let Some(b) = &self.cfg.bands {
            self.subset_of("bands.keep", &b.keep)?;
            if let Some(nom) = &b.nominal {
                if nom.len() != self.param_names().len() {
                    return Err(Error::config("bands.nominal", "one nominal value per parameter is required"));
                }
            }
        }
        Ok(())
    }

    pub fn time_rule(&self) -> Result<TimeRule> {
        if let Some(t) = &self.table {
            return Ok(t.ensemble().time_rule().clone());
        }
        let t = self.cfg.time.as_ref().expect("validated");
        Ok(match &t.grid {
            Some(g) => TimeRule::trapezoid(g)?,
            None => TimeRule::uniform(t.horizon.expect("validated"), t.dt.expect("validated"))?,
        })
    }

    fn samples(&self, np: usize) -> Result<SampleSet> {
        let s = self.cfg.sampling.as_ref().expect("validated");
        Ok(match s.scheme {
            SamplingScheme::Mc => draw_samples(np, s.n.expect("validated"), s.seed.unwrap_or(0))?,
            SamplingScheme::Tensor => {
                SampleSet::from_rule(&tensor_rule(&gauss_legendre(s.points.expect("validated"))?, np)?)
            }
            SamplingScheme::Smolyak => SampleSet::from_rule(&smolyak_rule(s.level.expect("validated"), np)?),
        })
    }

    fn note(&mut self, line: String) {
        self.log.push(line);
    }

    fn fresh(&self, name: &str, key: &str) -> bool {
        !self.force && self.manifest.keys.get(name).map(String::as_str) == Some(key) && self.path(name).exists()
    }

    fn record(&mut self, names: &[&str], key: &str) -> Result<()> {
        for n in names {
            self.manifest.keys.insert((*n).to_string(), key.to_string());
        }
        write_json(&self.path(MANIFEST), &self.manifest)
    }

    // Ensemble

    /// Compute (or reuse) and persist the ensemble.
    pub fn build_ensemble(&mut self) -> Result<Ensemble> {
        let key = self.cfg.ensemble_key();
        if self.fresh(ENSEMBLE_FILE, &key) {
            if let Ok((_, e)) = read_ensemble(&self.path(ENSEMBLE_FILE)) {
                self.note(format!("artifact {ENSEMBLE_FILE}: reused (key {key})"));
                return Ok(e);
            }
        }
        let e = match &self.table {
            Some(t) => t.ensemble().clone(),
            None => {
                let model = self.model();
                let rule = self.time_rule()?;
                let samples = self.samples(model.n_params())?;
                evaluate_ensemble(model.as_ref(), &samples, &rule, &Parallel)?
            }
        };
        let dt = self.cfg.time.as_ref().and_then(|t| t.dt);
        let names = self.param_names();
        write_ensemble(&self.path(ENSEMBLE_FILE), &e, self.cfg.model.id.as_str(), &names, dt, Some(key.clone()))?;
        let mut written = vec![ENSEMBLE_FILE];
        if self.cfg.output.ensemble_csv {
            write_ensemble_csv(&self.path(ENSEMBLE_CSV), &e)?;
            written.push(ENSEMBLE_CSV);
        }
        self.record(&written, &key)?;
        self.note(format!(
            "artifact {ENSEMBLE_FILE}: computed (key {key}, N = {}, grid = {})",
            e.n_samples(),
            e.n_times()
        ));
        Ok(e)
    }

    /// The persisted ensemble; an explicit error when it is absent or stale.
    pub fn load_ensemble(&mut self) -> Result<Ensemble> {
        let path = self.path(ENSEMBLE_FILE);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                hint: "run `gensobol ensemble` (or `gensobol run`) first".into(),
            });
        }
        let key = self.cfg.ensemble_key();
        let (h, e) = read_ensemble(&path)?;
        if h.key.as_deref() != Some(key.as_str()) {
            return Err(Error::MissingArtifact {
                path,
                hint: "the stored ensemble was produced by different model/time/sampling settings; rerun `gensobol ensemble --force`".into(),
            });
        }
        self.note(format!("artifact {ENSEMBLE_FILE}: reused (key {key})"));
        Ok(e)
    }

    // Spectrum

    fn spectrum_key(&self) -> String {
        key_of(&(self.cfg.ensemble_key(), self.cfg.spectrum.count, &self.cfg.spectrum.eigen))
    }

    /// Centered ensemble and its spectrum, reusing `spectrum.bin` when it is current.
    pub fn spectrum(&mut self, ensemble: &Ensemble) -> Result<(Ensemble, Spectrum)> {
        let key = self.spectrum_key();
        let count = self.cfg.spectrum.count.min(ensemble.n_times());
        if self.fresh(SPECTRUM_BIN, &key) {
            if let Ok((_, s)) = read_spectrum(&self.path(SPECTRUM_BIN)) {
                if s.len() == count {
                    let centered = if ensemble.is_centered() { ensemble.clone() } else { ensemble.clone().center()? };
                    self.note(format!("artifact {SPECTRUM_BIN}: reused (key {key})"));
                    return Ok((centered, s));
                }
            }
        }
        let (centered, s) = ensemble_spectrum(ensemble, count, self.cfg.eigen_method(), &Parallel)?;
        write_spectrum(&self.path(SPECTRUM_CSV), &self.path(SPECTRUM_BIN), &s, Some(self.cfg.ensemble_key()))?;
        self.record(&[SPECTRUM_CSV, SPECTRUM_BIN], &key)?;
        self.note(format!(
            "artifact {SPECTRUM_BIN}: computed (key {key}, pairs = {count}, lanczos fallback = {}, clipped = {:e})",
            s.lanczos_fallback(),
            s.clipped()
        ));
        Ok((centered, s))
    }

    // Sobol

    fn cs_config(&self) -> CsConfig {
        let c = &self.cfg.cs;
        CsConfig {
            tau: match c.tau {
                TauSetting::Fixed(t) => Tau::Fixed(t),
                TauSetting::Named(_) => Tau::Auto,
            },
            cv_folds: c.folds,
            solver_tol: c.tol,
            max_iter: c.max_iter,
            cv_grid: c.grid,
            seed: c.seed,
        }
    }

    fn mc_config(&self) -> McConfig {
        let m = &self.cfg.mc;
        McConfig { n: m.n, seed: m.seed, bootstrap: m.bootstrap, chunk: m.chunk }
    }

    fn nkl_choice(&self) -> NklChoice {
        match (self.cfg.pipeline.nkl, self.cfg.pipeline.variance_ratio) {
            (Some(k), _) => NklChoice::Fixed(k),
            (None, Some(r)) => NklChoice::Ratio(r),
            _ => unreachable!("validated"),
        }
    }

    fn sobol_key(&self) -> String {
        let upstream = match self.cfg.method() {
            Method::Mc => String::new(),
            m if m.is_spectral() => self.spectrum_key(),
            _ => self.cfg.ensemble_key(),
        };
        let mc_model = match self.cfg.method() {
            Method::Mc => Some((self.cfg.ensemble_key(), &self.cfg.mc)),
            _ => None,
        };
        key_of(&(upstream, &self.cfg.pipeline, &self.cfg.cs, mc_model, &self.cfg.targets))
    }

    fn spectral_fit(&mut self, ensemble: &Ensemble) -> Result<SpectralOutput> {
        let (centered, spectrum) = self.spectrum(ensemble)?;
        let fit = match self.cfg.method() {
            Method::SpectralNisp => ModeFit::Nisp,
            _ => ModeFit::Cs(self.cs_config()),
        };
        spectral_from_spectrum(
            &centered,
            spectrum,
            &fit,
            self.cfg.pipeline.order.expect("validated"),
            self.nkl_choice(),
            &self.targets()?,
            self.cfg.denominator(),
            &Parallel,
        )
        .map_err(Error::from)
    }

    fn tau_policy(&self, rule: &TimeRule) -> TauPolicy {
        match self.cfg.cs.tau_policy.as_str() {
            "per-node" => TauPolicy::PerNode,
            _ => TauPolicy::Freeze { at: self.cfg.cs.freeze_at.unwrap_or(rule.horizon()) },
        }
    }

    /// Estimate the configured indices and write `sobol.csv`, `sobol.json`,
    /// `pointwise.csv` and the fitted surrogate. Returns the report and the
    /// per-node variances used for windows.
    pub fn sobol(&mut self, ensemble: Option<&Ensemble>) -> Result<(SobolReport, PointwiseVariances)> {
        let method = self.cfg.method();
        let targets = self.targets()?;
        let names = self.param_names();
        let key = self.sobol_key();
        let owned;
        let ensemble = match (method, ensemble) {
            (Method::Mc, _) => None,
            (_, Some(e)) => Some(e),
            (_, None) => {
                owned = self.load_ensemble()?;
                Some(&owned)
            }
        };
        let rule = self.time_rule()?;
        let (report, pv) = match method {
            Method::Mc => {
                let model = self.model();
                let out = generalized_mc(model.as_ref(), &targets, &rule, &self.mc_config(), &Parallel)?;
                (out.report, out.pointwise)
            }
            Method::PointwiseNisp | Method::PointwiseCs => {
                let e = ensemble.expect("ensemble");
                let order = self.cfg.pipeline.order.expect("validated");
                let out = if method == Method::PointwiseNisp {
                    pointwise_nisp(e, order, &targets, &Parallel)?
                } else {
                    pointwise_cs(e, order, &self.cs_config(), self.tau_policy(&rule), &targets, &Parallel)?
                };
                write_pce_trajectory(&self.path(PCE_FILE), &out.pce, rule.nodes())?;
                let pv = pointwise_variances_from_pce(&out.pce, &targets)?;
                (out.report, pv)
            }
            Method::SpectralNisp | Method::SpectralCs => {
                let out = self.spectral_fit(ensemble.expect("ensemble"))?;
                let nkl = out.surrogate.n_modes();
                write_surrogate(&self.path(SURROGATE_FILE), &out.surrogate, &out.spectrum.eigenvalues()[..nkl])?;
                let pv = pointwise_variances_from_pce(&out.surrogate.to_pce_trajectory()?, &targets)?;
                (out.report, pv)
            }
        };
        let denom = method.is_spectral().then(|| self.cfg.denominator().as_str());
        write_sobol(&self.path(SOBOL_CSV), &self.path(SOBOL_JSON), &report, &names, denom)?;
        write_pointwise_csv(&self.path(POINTWISE_CSV), rule.nodes(), &pv, &names)?;
        self.record(&[SOBOL_CSV, SOBOL_JSON, POINTWISE_CSV], &key)?;
        self.note(format!(
            "artifact {SOBOL_CSV}: computed (key {key}, method = {}, denominator = {:e})",
            method.as_str(),
            report.diagnostics.denominator
        ));
        for (i, v) in report.flags() {
            self.note(format!("flag: {} {:?}", artifact::subset_label(&report.entries[i].target, &names), v));
        }
        Ok((report, pv))
    }

    // Window

    fn window_taus(&self, rule: &TimeRule, pv: &PointwiseVariances) -> Vec<f64> {
        let first_positive =
            pv.variance.iter().position(|&d| d > 0.0).map(|m| rule.nodes()[m]).unwrap_or(rule.horizon());
        let second = rule.nodes().get(1).copied().unwrap_or(rule.horizon());
        let tau_min = self.cfg.window.tau_min.unwrap_or(first_positive).max(first_positive).max(second);
        window_taus(rule, tau_min, self.cfg.window.stride)
    }

    /// Growing-window totals on `[0, tau]`, written to `window.csv`.
    pub fn window(&mut self) -> Result<Vec<WindowPoint>> {
        let method = self.cfg.method();
        let targets = self.targets()?;
        let rule = self.time_rule()?;
        let points = match method {
            Method::SpectralNisp | Method::SpectralCs => {
                let e = self.load_ensemble()?;
                let out = self.spectral_fit(&e)?;
                let pv = pointwise_variances_from_pce(&out.surrogate.to_pce_trajectory()?, &targets)?;
                let taus = self.window_taus(&rule, &pv);
                spectral_window(&out, &targets, &taus)?
            }
            Method::PointwiseNisp | Method::PointwiseCs => {
                let e = self.load_ensemble()?;
                let order = self.cfg.pipeline.order.expect("validated");
                let out = if method == Method::PointwiseNisp {
                    pointwise_nisp(&e, order, &targets, &Parallel)?
                } else {
                    pointwise_cs(&e, order, &self.cs_config(), self.tau_policy(&rule), &targets, &Parallel)?
                };
                let pv = pointwise_variances_from_pce(&out.pce, &targets)?;
                let taus = self.window_taus(&rule, &pv);
                growing_window(WindowSource::Pce { traj: &out.pce, targets: &targets }, &rule, &taus)?
            }
            Method::Mc => {
                let model = self.model();
                let out = generalized_mc(model.as_ref(), &targets, &rule, &self.mc_config(), &Parallel)?;
                drop(model);
                let taus = self.window_taus(&rule, &out.pointwise);
                growing_window(WindowSource::Pointwise(&out.pointwise), &rule, &taus)?
            }
        };
        let names = self.param_names();
        write_window_csv(&self.path(WINDOW_CSV), &points, &names)?;
        let key = key_of(&(self.sobol_key(), &self.cfg.window));
        self.record(&[WINDOW_CSV], &key)?;
        self.note(format!("artifact {WINDOW_CSV}: computed ({} windows)", points.len()));
        Ok(points)
    }

    // Fixing

    pub fn fix(&mut self) -> Result<FixingReport> {
        let f = self
            .cfg
            .fixing
            .clone()
            .ok_or_else(|| Error::config("fixing", "missing [fixing] section (or pass --keep)"))?;
        let kept = self.subset_of("fixing.keep", &f.keep)?;
        let rule = self.time_rule()?;
        let cfg = FixingConfig {
            n_nominal: f.n_nominal,
            n_eval: f.n_eval,
            n_ref: f.n_ref,
            seed: f.seed,
            eps_levels: f.eps_levels.clone(),
        };
        let model = self.model();
        let r = fixing_error(model.as_ref(), &kept, &rule, &cfg, &Parallel)?;
        drop(model);
        let names = self.param_names();
        write_fixing(&self.path(FIXING_CSV), &self.path(FIXING_JSON), &r, &names)?;
        let key = key_of(&(self.cfg.ensemble_key(), &f));
        self.record(&[FIXING_CSV, FIXING_JSON], &key)?;
        self.note(format!(
            "artifact {FIXING_CSV}: computed (mean error = {}, reference S_tot = {})",
            r.mean_error, r.reference_total
        ));
        Ok(r)
    }

    // Bands

    pub fn bands(&mut self) -> Result<(Bands, BandCoverage, BandCoverage)> {
        let b =
            self.cfg.bands.clone().ok_or_else(|| Error::config("bands", "missing [bands] section (or pass --keep)"))?;
        let kept = self.subset_of("bands.keep", &b.keep)?;
        let rule = self.time_rule()?;
        let np = self.param_names().len();
        let nominal = b.nominal.clone().unwrap_or_else(|| vec![0.0; np]);
        let model = self.model();
        let bands = reduced_model_bands(
            model.as_ref(),
            &kept,
            &nominal,
            b.n,
            &rule,
            (b.percentiles[0], b.percentiles[1]),
            b.seed,
            &Parallel,
        )?;
        drop(model);
        let cov = band_coverage(&bands, b.dilation);
        let agree = band_agreement(&bands, b.dilation);
        write_bands_csv(&self.path(BANDS_CSV), &bands)?;
        write_json(
            &self.path(BANDS_JSON),
            &BandsSummary {
                kept: b.keep.clone(),
                nominal,
                dilation: b.dilation,
                covered: cov.all_covered(),
                first_uncovered: cov.first_violation,
                agrees: agree.all_covered(),
                first_disagreement: agree.first_violation,
            },
        )?;
        let key = key_of(&(self.cfg.ensemble_key(), &b));
        self.record(&[BANDS_CSV, BANDS_JSON], &key)?;
        self.note(format!(
            "artifact {BANDS_CSV}: computed (covered = {}, agrees = {})",
            cov.all_covered(),
            agree.all_covered()
        ));
        Ok((bands, cov, agree))
    }

    /// Ensemble, spectrum and the configured Sobol' report.
    pub fn run(&mut self) -> Result<SobolReport> {
        let e = self.build_ensemble()?;
        if !self.cfg.method().is_spectral() {
            self.spectrum(&e)?;
        }
        Ok(self.sobol(Some(&e))?.0)
    }

    /// Append this invocation's provenance block to `run.log`.
    pub fn write_log(&mut self, command: &str, overrides: &[String]) -> Result<()> {
        let c = &self.cfg;
        let ode = self.ode();
        let s = c.sampling.as_ref();
        let mut block = vec![
            format!("== gensobol {} :: {command}", env!("CARGO_PKG_VERSION")),
            format!("config sha256 {}", self.config_hash),
            format!("overrides {}", if overrides.is_empty() { "none".into() } else { overrides.join(" ") }),
            format!(
                "model {} np {} method {} order {:?} nkl {:?} variance_ratio {:?} denominator {}",
                c.model.id.as_str(),
                self.param_names().len(),
                c.pipeline.method,
                c.pipeline.order,
                c.pipeline.nkl,
                c.pipeline.variance_ratio,
                c.denominator().as_str()
            ),
            format!(
                "seeds sampling {:?} cs {} mc {} fixing {:?} bands {:?}",
                s.and_then(|s| s.seed),
                c.cs.seed,
                c.mc.seed,
                c.fixing.as_ref().map(|f| f.seed),
                c.bands.as_ref().map(|b| b.seed)
            ),
            format!(
                "tolerances ode abs {:e} rel {:e}; cs tol {:e} max_iter {} folds {} grid {} tau {:?} policy {}; eig negative {:e}; mc n {} bootstrap {} chunk {}",
                ode.abs_tol,
                ode.rel_tol,
                c.cs.tol,
                c.cs.max_iter,
                c.cs.folds,
                c.cs.grid,
                c.cs.tau,
                c.cs.tau_policy,
                NEGATIVE_TOL,
                c.mc.n,
                c.mc.bootstrap,
                c.mc.chunk
            ),
        ];
        block.append(&mut self.log);
        let path = self.path(LOG_FILE);
        let mut text = std::fs::read_to_string(&path).unwrap_or_default();
        for line in block {
            text.push_str(&line);
            text.push('\n');
        }
        artifact::atomic_write(&path, text.as_bytes())
    }
}
