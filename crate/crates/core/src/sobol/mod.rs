//! Generalized Sobol' indices.
//!
//! For a time grid `{t_m, w_m}` the generalized first-order and total indices of
//! a subset `U` are
//!
//! ```text
//! S^U     = sum_m w_m D^U(t_m)     / sum_m w_m D(t_m)
//! S_tot^U = sum_m w_m D_tot^U(t_m) / sum_m w_m D(t_m)
//! ```
//!
//! where `D^U`, `D_tot^U` and `D` are the pointwise first-order, total and full
//! variances. Nodes with `D(t_m) = 0` contribute nothing to either sum.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pce::{PcExpansion, PceTrajectory};
use crate::quadrature::TimeRule;

mod fixing;
pub mod mc;
pub mod pipeline;
mod subset;
mod window;

pub use fixing::{
    band_agreement, band_coverage, fixing_error, percentile, reduced_model_bands, BandCoverage, Bands, FixingConfig,
    FixingReport, MarkovCheck,
};
pub use mc::{generalized_mc, McConfig, McOutput};
pub use subset::Subset;
pub use window::{growing_window, window_taus, WindowPoint, WindowSource};

/// Tolerance used when flagging ordering violations of deterministic estimates.
pub const DEFAULT_REPORT_EPS: f64 = 1e-8;

/// Integrated variance below this fraction of the integrated squared mean is round-off.
pub const ROUNDOFF_VARIANCE: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PointwiseNisp,
    PointwiseCs,
    SpectralNisp,
    SpectralCs,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PointwiseNisp => "pointwise-nisp",
            Method::PointwiseCs => "pointwise-cs",
            Method::SpectralNisp => "spectral-nisp",
            Method::SpectralCs => "spectral-cs",
            Method::Mc => "mc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pointwise-nisp" => Method::PointwiseNisp,
            "pointwise-cs" => Method::PointwiseCs,
            "spectral-nisp" => Method::SpectralNisp,
            "spectral-cs" => Method::SpectralCs,
            "mc" => Method::Mc,
            _ => return None,
        })
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Method::SpectralNisp | Method::SpectralCs)
    }

    pub fn needs_quadrature(&self) -> bool {
        matches!(self, Method::PointwiseNisp | Method::SpectralNisp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `S^U < 0`.
    NegativeFirst,
    /// `S^U > S_tot^U`.
    FirstAboveTotal,
    /// `S_tot^U > 1`.
    TotalAboveOne,
}

/// Generalized indices of one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEstimate {
    pub target: Subset,
    pub first: f64,
    pub total: f64,
    /// Bootstrap standard errors (Monte Carlo only).
    pub first_se: Option<f64>,
    pub total_se: Option<f64>,
}

impl IndexEstimate {
    pub fn new(target: Subset, first: f64, total: f64) -> Self {
        Self { target, first, total, first_se: None, total_se: None }
    }

    /// Ordering violations beyond `eps`; values are never clamped.
    pub fn violations(&self, eps: f64) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.first < -eps {
            v.push(Violation::NegativeFirst);
        }
        if self.first > self.total + eps {
            v.push(Violation::FirstAboveTotal);
        }
        if self.total > 1.0 + eps {
            v.push(Violation::TotalAboveOne);
        }
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub nkl: Option<usize>,
    pub order: Option<usize>,
    pub n_samples: usize,
    pub seed: Option<u64>,
    /// Truncation ratio of the retained KL modes.
    pub variance_ratio: Option<f64>,
    /// Denominator of the indices (`sum_m w_m D(t_m)` or `sum_i lambda_i`).
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolReport {
    pub method: Method,
    pub horizon: f64,
    pub entries: Vec<IndexEstimate>,
    pub diagnostics: Diagnostics,
    pub report_eps: f64,
}

impl SobolReport {
    pub fn new(method: Method, horizon: f64, entries: Vec<IndexEstimate>, diagnostics: Diagnostics) -> Self {
        Self { method, horizon, entries, diagnostics, report_eps: DEFAULT_REPORT_EPS }
    }

    pub fn entry(&self, target: &Subset) -> Option<&IndexEstimate> {
        self.entries.iter().find(|e| &e.target == target)
    }

    /// `(entry index, violation)` for every flagged entry.
    pub fn flags(&self) -> Vec<(usize, Violation)> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            let eps = match (e.first_se, e.total_se) {
                (Some(a), Some(b)) => self.report_eps.max(3.0 * a.max(b)),
                _ => self.report_eps,
            };
            out.extend(e.violations(eps).into_iter().map(|v| (i, v)));
        }
        out
    }
}

/// Pointwise partial variances for a list of targets on one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseVariances {
    pub targets: Vec<Subset>,
    /// `D(t_m)`.
    pub variance: Vec<f64>,
    /// `D^U(t_m)`, one row per target.
    pub first: Matrix,
    /// `D_tot^U(t_m)`, one row per target.
    pub total: Matrix,
}

/// Pointwise classical indices of one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseIndices {
    pub variance: Vec<f64>,
    pub first_variance: Vec<f64>,
    pub total_variance: Vec<f64>,
    /// `None` where `D(t_m) = 0`.
    pub first: Vec<Option<f64>>,
    pub total: Vec<Option<f64>>,
}

impl PointwiseVariances {
    pub fn new(targets: Vec<Subset>, variance: Vec<f64>, first: Matrix, total: Matrix) -> Result<Self> {
        let n = variance.len();
        if first.rows() != targets.len() || total.rows() != targets.len() || first.cols() != n || total.cols() != n {
            return Err(Error::mismatch("pointwise variance arrays have inconsistent shapes"));
        }
        Ok(Self { targets, variance, first, total })
    }

    pub fn n_times(&self) -> usize {
        self.variance.len()
    }

    pub fn target_index(&self, u: &Subset) -> Option<usize> {
        self.targets.iter().position(|t| t == u)
    }

    pub fn indices(&self, j: usize) -> PointwiseIndices {
        let ratio = |num: &[f64]| -> Vec<Option<f64>> {
            num.iter().zip(&self.variance).map(|(a, d)| if *d > 0.0 { Some(a / d) } else { None }).collect()
        };
        PointwiseIndices {
            variance: self.variance.clone(),
            first_variance: self.first.row(j).to_vec(),
            total_variance: self.total.row(j).to_vec(),
            first: ratio(self.first.row(j)),
            total: ratio(self.total.row(j)),
        }
    }

    /// Generalized indices on `rule`, which may cover a prefix of the grid.
    pub fn generalized(&self, rule: &TimeRule) -> Result<Vec<IndexEstimate>> {
        let n = rule.len();
        if n > self.n_times() {
            return Err(Error::mismatch("time rule is longer than the pointwise arrays"));
        }
        let denom = rule.integrate(&self.variance[..n]);
        if !(denom > 0.0) {
            return Err(Error::degenerate("time-integrated variance is zero"));
        }
        Ok(self
            .targets
            .iter()
            .enumerate()
            .map(|(j, &u)| {
                IndexEstimate::new(
                    u,
                    rule.integrate(&self.first.row(j)[..n]) / denom,
                    rule.integrate(&self.total.row(j)[..n]) / denom,
                )
            })
            .collect())
    }
}

/// Partial variances of every target at every node of a per-node expansion.
pub fn pointwise_variances_from_pce(traj: &PceTrajectory, targets: &[Subset]) -> Result<PointwiseVariances> {
    check_targets(targets, traj.basis().np())?;
    let n = traj.n_times();
    let mut variance = vec![0.0; n];
    let mut first = Matrix::zeros(targets.len(), n);
    let mut total = Matrix::zeros(targets.len(), n);
    for m in 0..n {
        for (j, u) in targets.iter().enumerate() {
            let s = traj.split_at(m, u);
            variance[m] = s.variance;
            first[(j, m)] = s.first;
            total[(j, m)] = s.total;
        }
        if targets.is_empty() {
            variance[m] = traj.variance_at(m);
        }
    }
    PointwiseVariances::new(targets.to_vec(), variance, first, total)
}

/// Classical pointwise indices of `u` at every node.
pub fn pointwise_indices_from_pce(traj: &PceTrajectory, u: &Subset) -> Result<PointwiseIndices> {
    let pv = pointwise_variances_from_pce(traj, core::slice::from_ref(u))?;
    if pv.variance.iter().all(|&d| !(d > 0.0)) {
        return Err(Error::degenerate("variance is zero at every time node"));
    }
    Ok(pv.indices(0))
}

/// Generalized indices from pointwise variances on the full grid of `rule`.
pub fn generalized_from_pointwise(pv: &PointwiseVariances, rule: &TimeRule) -> Result<Vec<IndexEstimate>> {
    if rule.len() != pv.n_times() {
        return Err(Error::mismatch("time rule and pointwise arrays differ in length"));
    }
    pv.generalized(rule)
}

/// Generalized indices of a per-node expansion in closed form:
/// `sum_{k} ||Psi_k||^2 sum_m w_m c_k(t_m)^2` over the relevant index sets.
///
/// `rule` may cover a prefix of the expansion's grid.
pub fn generalized_from_pce(traj: &PceTrajectory, rule: &TimeRule, targets: &[Subset]) -> Result<Vec<IndexEstimate>> {
    let basis = traj.basis();
    check_targets(targets, basis.np())?;
    let n = rule.len();
    if n > traj.n_times() {
        return Err(Error::mismatch("time rule is longer than the expansion grid"));
    }
    let w = rule.weights();
    let p = basis.len();
    let mut energy = vec![0.0; p];
    for m in 0..n {
        let row = traj.coeffs().row(m);
        for k in 0..p {
            energy[k] += w[m] * row[k] * row[k];
        }
    }
    for (k, e) in energy.iter_mut().enumerate() {
        *e *= basis.norm_sq(k);
    }
    let denom: f64 = energy[1..].iter().sum();
    // A variance at projection round-off relative to the mean is treated as zero.
    if !(denom > 0.0 && denom > ROUNDOFF_VARIANCE * energy[0]) {
        return Err(Error::degenerate("time-integrated variance is zero"));
    }
    Ok(targets
        .iter()
        .map(|u| {
            let mask = u.mask();
            let (mut first, mut total) = (0.0, 0.0);
            for k in 1..p {
                let s = basis.support(k);
                if s & mask != 0 {
                    total += energy[k];
                    if s & !mask == 0 {
                        first += energy[k];
                    }
                }
            }
            IndexEstimate::new(*u, first / denom, total / denom)
        })
        .collect())
}

/// Spectral indices from KL-mode surrogates:
/// `S^U = sum_i Var(E[f_i | xi_U]) / sum_i lambda_i`, `S_tot^U = 1 - S^{U^c}`.
pub fn generalized_spectral(modes: &[PcExpansion], lambdas: &[f64], targets: &[Subset]) -> Result<Vec<IndexEstimate>> {
    if modes.len() != lambdas.len() {
        return Err(Error::mismatch("need one surrogate per eigenvalue"));
    }
    spectral_with_denominator(modes, lambdas.iter().sum(), targets)
}

/// Normalizer of the spectral ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Denominator {
    /// Sum of the retained eigenvalues.
    #[default]
    Eigenvalues,
    /// Sum of the surrogate mode variances; equal to the eigenvalue sum for
    /// exact modes but free of its sampling noise relative to the numerator.
    Surrogate,
}

impl Denominator {
    pub fn as_str(self) -> &'static str {
        match self {
            Denominator::Eigenvalues => "eigenvalues",
            Denominator::Surrogate => "surrogate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eigenvalues" => Some(Denominator::Eigenvalues),
            "surrogate" => Some(Denominator::Surrogate),
            _ => None,
        }
    }

    /// Value of the normalizer for retained modes and eigenvalues.
    pub fn value(self, modes: &[PcExpansion], lambdas: &[f64]) -> f64 {
        match self {
            Denominator::Eigenvalues => lambdas.iter().sum(),
            Denominator::Surrogate => modes.iter().map(|m| m.variance()).sum(),
        }
    }
}

/// Spectral ratio against an explicit denominator.
pub fn spectral_with_denominator(modes: &[PcExpansion], denom: f64, targets: &[Subset]) -> Result<Vec<IndexEstimate>> {
    if modes.is_empty() {
        return Err(Error::mismatch("need at least one surrogate mode"));
    }
    let np = modes[0].basis().np();
    check_targets(targets, np)?;
    if !(denom > 0.0) {
        return Err(Error::degenerate("spectral denominator is zero"));
    }
    let first_of = |u: &Subset| -> f64 { modes.iter().map(|e| e.split(u).first).sum::<f64>() / denom };
    Ok(targets.iter().map(|u| IndexEstimate::new(*u, first_of(u), 1.0 - first_of(&u.complement()))).collect())
}

pub(crate) fn check_targets(targets: &[Subset], np: usize) -> Result<()> {
    if targets.iter().any(|u| u.np() != np) {
        return Err(Error::mismatch("subset dimension differs from the parameter count"));
    }
    Ok(())
}

/// Singletons `{0}, .., {np - 1}`.
pub fn singletons(np: usize) -> Vec<Subset> {
    (0..np).map(|i| Subset::singleton(np, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pce::total_degree_basis;

    fn traj_from(np: usize, order: usize, n: usize, f: impl Fn(usize, &[u32]) -> f64) -> PceTrajectory {
        let b = total_degree_basis(np, order).unwrap();
        let c = Matrix::from_fn(n, b.len(), |m, k| f(m, b.alpha(k)));
        PceTrajectory::new(b, c).unwrap()
    }

    #[test]
    fn linear_in_time_single_variable() {
        // f(t, xi) = t xi_1 on t = 0, 0.5, .., 2.
        let rule = TimeRule::uniform(2.0, 0.5).unwrap();
        let traj = traj_from(2, 2, rule.len(), |m, a| if a == [1, 0] { rule.nodes()[m] } else { 0.0 });
        let pi = pointwise_indices_from_pce(&traj, &Subset::singleton(2, 0)).unwrap();
        assert_eq!(pi.first[0], None);
        assert!(pi.first[1..].iter().all(|s| *s == Some(1.0)));
        let g = generalized_from_pce(&traj, &rule, &singletons(2)).unwrap();
        assert_eq!((g[0].first, g[0].total), (1.0, 1.0));
        assert_eq!((g[1].first, g[1].total), (0.0, 0.0));
    }

    #[test]
    fn common_time_factor_cancels() {
        let rule = TimeRule::uniform(3.0, 0.1).unwrap();
        let g = |m: usize| libm::sin(3.0 * rule.nodes()[m]) + 0.2;
        let traj = traj_from(2, 1, rule.len(), |m, a| if a == [1, 0] || a == [0, 1] { g(m) } else { 0.0 });
        let est = generalized_from_pce(&traj, &rule, &singletons(2)).unwrap();
        for e in &est {
            assert!((e.first - 0.5).abs() < 1e-14);
        }
        let pv = pointwise_variances_from_pce(&traj, &singletons(2)).unwrap();
        let est2 = generalized_from_pointwise(&pv, &rule).unwrap();
        for (a, b) in est.iter().zip(&est2) {
            assert!((a.first - b.first).abs() < 1e-14 && (a.total - b.total).abs() < 1e-14);
        }
    }

    #[test]
    fn all_zero_variance_is_degenerate() {
        let rule = TimeRule::uniform(1.0, 0.5).unwrap();
        let traj = traj_from(2, 1, rule.len(), |_, a| if a == [0, 0] { 1.0 } else { 0.0 });
        assert!(matches!(pointwise_indices_from_pce(&traj, &Subset::singleton(2, 0)), Err(Error::Degenerate(_))));
        assert!(generalized_from_pce(&traj, &rule, &singletons(2)).is_err());
    }

    #[test]
    fn spectral_single_mode() {
        let b = total_degree_basis(2, 2).unwrap();
        let mut c = vec![0.0; b.len()];
        c[1] = 1.0;
        let e = PcExpansion::new(b, c).unwrap();
        let est = generalized_spectral(&[e], &[1.0 / 3.0], &singletons(2)).unwrap();
        assert!((est[0].first - 1.0).abs() < 1e-15);
        assert!((est[0].total - 1.0).abs() < 1e-15);
        assert!(est[1].first.abs() < 1e-15 && est[1].total.abs() < 1e-15);
        assert!(generalized_spectral(&[], &[], &[]).is_err());
    }

    #[test]
    fn surrogate_denominator_makes_full_set_one() {
        let b = total_degree_basis(2, 2).unwrap();
        let mut c = vec![0.0; b.len()];
        c[1] = 1.0;
        c[4] = 0.5;
        let e = PcExpansion::new(b, c).unwrap();
        let modes = [e];
        let full = Subset::full(2);
        let d = Denominator::Surrogate.value(&modes, &[0.9]);
        let s = spectral_with_denominator(&modes, d, &[full, Subset::singleton(2, 0)]).unwrap();
        assert!((s[0].first - 1.0).abs() < 1e-14);
        // xi_1 alone carries 1/3 of the 1/3 + 0.25/9 variance.
        assert!((s[1].first - (1.0 / 3.0) / (1.0 / 3.0 + 0.25 / 9.0)).abs() < 1e-14);
        let s = generalized_spectral(&modes, &[0.9], &[full]).unwrap();
        assert!((s[0].first - (1.0 / 3.0 + 0.25 / 9.0) / 0.9).abs() < 1e-14);
        assert_eq!(Denominator::parse(Denominator::Surrogate.as_str()), Some(Denominator::Surrogate));
    }

    #[test]
    fn violations_are_flagged_not_clamped() {
        let u = Subset::singleton(2, 0);
        let e = IndexEstimate::new(u, -0.1, 1.2);
        let v = e.violations(1e-8);
        assert!(v.contains(&Violation::NegativeFirst) && v.contains(&Violation::TotalAboveOne));
        let r = SobolReport::new(Method::Mc, 1.0, vec![e], Diagnostics::default());
        assert_eq!(r.flags().len(), 2);
        assert_eq!(r.entries[0].first, -0.1);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::PointwiseNisp, Method::PointwiseCs, Method::SpectralNisp, Method::SpectralCs, Method::Mc] {
            assert_eq!(Method::parse(m.as_str()), Some(m));
        }
    }
}
