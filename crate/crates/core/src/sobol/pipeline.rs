//! End-to-end estimators: pointwise-in-time PCE (NISP or CS) and spectral KL.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    generalized_from_pce, growing_window, spectral_with_denominator, Denominator, Diagnostics, Method, SobolReport,
    Subset, WindowPoint, WindowSource,
};
use crate::batch::Batch;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::kl::{kl_modes, nystrom_eig, variance_ratio, EigenMethod, KlModes, KlSurrogate, Spectrum};
use crate::linalg::Matrix;
use crate::pce::{total_degree_basis, CsConfig, CsProblem, NispProjector, PcExpansion, PceTrajectory, Tau};

/// How the CS radius is chosen across time nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    /// Cross-validate at every node (expensive).
    PerNode,
    /// Cross-validate once at node `at`, then keep `tau / ||c_ridge||_1` fixed.
    Freeze { at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeFit {
    Nisp,
    Cs(CsConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NklChoice {
    Fixed(usize),
    /// Smallest `N_kl` whose truncation ratio reaches the target.
    Ratio(f64),
}

#[derive(Debug, Clone)]
pub struct PointwiseOutput {
    pub report: SobolReport,
    pub pce: PceTrajectory,
    /// Radius used at each node (CS only).
    pub taus: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SpectralOutput {
    pub report: SobolReport,
    pub spectrum: Spectrum,
    pub modes: KlModes,
    pub surrogate: KlSurrogate,
}

/// Uncentered values at node `m`.
fn node_values(e: &Ensemble, m: usize) -> Vec<f64> {
    let shift = if e.is_centered() { e.mean()[m] } else { 0.0 };
    (0..e.n_samples()).map(|k| e.value(m, k) + shift).collect()
}

fn diagnostics(e: &Ensemble, order: usize, denominator: f64) -> Diagnostics {
    Diagnostics {
        order: Some(order),
        n_samples: e.n_samples(),
        seed: e.samples().seed(),
        denominator,
        ..Diagnostics::default()
    }
}

fn pce_denominator(traj: &PceTrajectory, e: &Ensemble) -> f64 {
    let v: Vec<f64> = (0..traj.n_times()).map(|m| traj.variance_at(m)).collect();
    e.time_rule().integrate(&v)
}

/// Per-node NISP projection on a quadrature ensemble.
pub fn pointwise_nisp<B: Batch>(
    ensemble: &Ensemble,
    order: usize,
    targets: &[Subset],
    batch: &B,
) -> Result<PointwiseOutput> {
    let rule = ensemble.samples().as_rule()?;
    let basis = total_degree_basis(rule.dim(), order)?;
    let proj = NispProjector::new(&rule, &basis)?;
    let nt = ensemble.n_times();
    let rows = batch.map(nt, |m| proj.matrix().matvec(&node_values(ensemble, m)));
    let coeffs = Matrix::from_row_major(nt, basis.len(), rows.concat())?;
    let pce = PceTrajectory::new(basis, coeffs)?;
    let entries = generalized_from_pce(&pce, ensemble.time_rule(), targets)?;
    let report = SobolReport::new(
        Method::PointwiseNisp,
        ensemble.time_rule().horizon(),
        entries,
        diagnostics(ensemble, order, pce_denominator(&pce, ensemble)),
    );
    Ok(PointwiseOutput { report, pce, taus: None })
}

/// Per-node CS fits on a Monte Carlo ensemble.
pub fn pointwise_cs<B: Batch>(
    ensemble: &Ensemble,
    order: usize,
    cfg: &CsConfig,
    policy: TauPolicy,
    targets: &[Subset],
    batch: &B,
) -> Result<PointwiseOutput> {
    cfg.validate()?;
    let samples = ensemble.samples();
    let basis = total_degree_basis(samples.dim(), order)?;
    let folds = if cfg.tau == Tau::Auto { cfg.cv_folds } else { 0 };
    let problem = CsProblem::new(&basis, samples.points(), folds, cfg.seed)?;
    let nt = ensemble.n_times();

    let taus: Vec<f64> = match (cfg.tau, policy) {
        (Tau::Fixed(t), _) => vec![t; nt],
        (Tau::Auto, TauPolicy::PerNode) => batch
            .map(nt, |m| problem.cross_validate(&node_values(ensemble, m), cfg))
            .into_iter()
            .collect::<Result<_>>()?,
        (Tau::Auto, TauPolicy::Freeze { at }) => {
            let ms = ensemble.time_rule().node_index(at)?;
            let v = node_values(ensemble, ms);
            let anchor = problem.ridge_l1(&v)?;
            if !(anchor > 0.0) {
                return Err(Error::degenerate("calibration node has an all-zero fit"));
            }
            let ratio = problem.cross_validate(&v, cfg)? / anchor;
            batch
                .map(nt, |m| problem.ridge_l1(&node_values(ensemble, m)).map(|a| ratio * a))
                .into_iter()
                .collect::<Result<_>>()?
        }
    };

    let rows =
        batch.map(nt, |m| problem.fit_with_tau(&node_values(ensemble, m), taus[m], cfg).map(|e| e.coeffs().to_vec()));
    let mut data = Vec::with_capacity(nt * basis.len());
    for r in rows {
        data.extend_from_slice(&r?);
    }
    let pce = PceTrajectory::new(basis, Matrix::from_row_major(nt, problem.basis().len(), data)?)?;
    let entries = generalized_from_pce(&pce, ensemble.time_rule(), targets)?;
    let report = SobolReport::new(
        Method::PointwiseCs,
        ensemble.time_rule().horizon(),
        entries,
        diagnostics(ensemble, order, pce_denominator(&pce, ensemble)),
    );
    Ok(PointwiseOutput { report, pce, taus: Some(taus) })
}

/// Eigenpairs of the sampled covariance of `ensemble` (centered or not).
pub fn ensemble_spectrum<B: Batch>(
    ensemble: &Ensemble,
    count: usize,
    method: EigenMethod,
    batch: &B,
) -> Result<(Ensemble, Spectrum)> {
    let centered = if ensemble.is_centered() { ensemble.clone() } else { ensemble.clone().center()? };
    let cov = centered.sample_covariance(batch)?;
    let spectrum = nystrom_eig(&cov, centered.time_rule(), count.min(centered.n_times()), method)?;
    Ok((centered, spectrum))
}

/// Resolve `N_kl` against a spectrum.
pub fn choose_nkl(spectrum: &Spectrum, choice: NklChoice) -> Result<usize> {
    match choice {
        NklChoice::Fixed(k) => {
            if k == 0 || k > spectrum.len() {
                return Err(Error::invalid("N_kl exceeds the available eigenpairs"));
            }
            Ok(k)
        }
        NklChoice::Ratio(r) => {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid("variance-ratio target must be in (0, 1]"));
            }
            for k in 1..=spectrum.len() {
                if variance_ratio(spectrum, k)? >= r {
                    return Ok(k);
                }
            }
            Ok(spectrum.len())
        }
    }
}

/// Spectral KL pipeline with a freshly computed spectrum.
#[allow(clippy::too_many_arguments)]
pub fn spectral<B: Batch>(
    ensemble: &Ensemble,
    fit: &ModeFit,
    order: usize,
    nkl: NklChoice,
    targets: &[Subset],
    method: EigenMethod,
    denom: Denominator,
    batch: &B,
) -> Result<SpectralOutput> {
    let count = match nkl {
        NklChoice::Fixed(k) => k,
        NklChoice::Ratio(_) => ensemble.n_times(),
    };
    let (centered, spectrum) = ensemble_spectrum(ensemble, count, method, batch)?;
    spectral_from_spectrum(&centered, spectrum, fit, order, nkl, targets, denom, batch)
}

/// Spectral KL pipeline reusing a spectrum of the same (centered) ensemble.
#[allow(clippy::too_many_arguments)]
pub fn spectral_from_spectrum<B: Batch>(
    centered: &Ensemble,
    spectrum: Spectrum,
    fit: &ModeFit,
    order: usize,
    nkl: NklChoice,
    targets: &[Subset],
    denom: Denominator,
    batch: &B,
) -> Result<SpectralOutput> {
    let nkl = choose_nkl(&spectrum, nkl)?;
    let modes = kl_modes(centered, &spectrum, nkl)?;
    let samples = centered.samples();
    let basis = total_degree_basis(samples.dim(), order)?;
    let pces: Vec<PcExpansion> = match fit {
        ModeFit::Nisp => {
            let proj = NispProjector::new(&samples.as_rule()?, &basis)?;
            (0..nkl).map(|i| proj.project(modes.mode(i))).collect::<Result<_>>()?
        }
        ModeFit::Cs(cfg) => {
            cfg.validate()?;
            let folds = if cfg.tau == Tau::Auto { cfg.cv_folds } else { 0 };
            let problem = CsProblem::new(&basis, samples.points(), folds, cfg.seed)?;
            batch.map(nkl, |i| problem.fit(modes.mode(i), cfg)).into_iter().collect::<Result<_>>()?
        }
    };
    let lambdas = &spectrum.eigenvalues()[..nkl];
    let d = denom.value(&pces, lambdas);
    let entries = spectral_with_denominator(&pces, d, targets)?;
    let method = match fit {
        ModeFit::Nisp => Method::SpectralNisp,
        ModeFit::Cs(_) => Method::SpectralCs,
    };
    let mut diag = diagnostics(centered, order, d);
    diag.nkl = Some(nkl);
    diag.variance_ratio = variance_ratio(&spectrum, nkl).ok();
    let report = SobolReport::new(method, centered.time_rule().horizon(), entries, diag);
    let surrogate = KlSurrogate::new(centered.time_rule().clone(), centered.mean().to_vec(), &spectrum, pces)?;
    Ok(SpectralOutput { report, spectrum, modes, surrogate })
}

/// Growing-window curves for a spectral result.
///
/// Windows shorter than `T` use the surrogate written as a per-node expansion;
/// the window at `T` is the spectral report itself.
pub fn spectral_window(out: &SpectralOutput, targets: &[Subset], taus: &[f64]) -> Result<Vec<WindowPoint>> {
    let traj = out.surrogate.to_pce_trajectory()?;
    let rule = out.surrogate.time_rule();
    let mut pts = growing_window(WindowSource::Pce { traj: &traj, targets }, rule, taus)?;
    if let Some(last) = pts.last_mut() {
        if rule.node_index(last.tau)? + 1 == rule.len() {
            last.entries = targets
                .iter()
                .map(|u| {
                    out.report
                        .entry(u)
                        .cloned()
                        .ok_or_else(|| Error::invalid("window target missing from the spectral report"))
                })
                .collect::<Result<_>>()?;
        }
    }
    Ok(pts)
}

/// Number of nodes at which the ranking of the defined curves changes
/// relative to the previous node where all curves are defined.
pub fn ranking_changes(curves: &[Vec<Option<f64>>]) -> usize {
    let n = curves.first().map_or(0, |c| c.len());
    let mut prev: Option<Vec<usize>> = None;
    let mut changes = 0;
    for m in 0..n {
        let vals: Option<Vec<f64>> = curves.iter().map(|c| c[m]).collect();
        let Some(vals) = vals else { continue };
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        if let Some(p) = &prev {
            if p != &order {
                changes += 1;
            }
        }
        prev = Some(order);
    }
    changes
}
