//! Discretized Karhunen-Loeve decomposition of a sampled covariance.
//!
//! The weighted eigenproblem `K W e = lambda e` is solved in the symmetric form
//! `W^{1/2} K W^{1/2} u = lambda u`, `e = W^{-1/2} u`, so the eigenvectors are
//! orthonormal in the `W` inner product.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{CovMatrix, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, symmetric_eigen, tridiagonal_eigen, Matrix};
use crate::math;
use crate::pce::{PcExpansion, PceTrajectory};
use crate::quadrature::TimeRule;

/// Eigenvalues below `-NEGATIVE_TOL * lambda_1` are treated as a data error.
pub const NEGATIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Lanczos when few pairs are requested from a large matrix.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `lambda_i / lambda_1`.
    #[default]
    Leading,
    /// `lambda_i / sum_m w_m K_mm`.
    Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Row `i` is `e_i` on the time grid.
    vectors: Matrix,
    weights: Vec<f64>,
    trace: f64,
    clipped: f64,
    lanczos_fallback: bool,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `sum_m w_m K_mm`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Largest magnitude of a negative eigenvalue that was set to zero.
    pub fn clipped(&self) -> f64 {
        self.clipped
    }

    /// True when Lanczos did not converge and the dense solver was used instead.
    pub fn lanczos_fallback(&self) -> bool {
        self.lanczos_fallback
    }

    pub fn normalized(&self, how: Normalization) -> Vec<f64> {
        let denom = match how {
            Normalization::Leading => self.eigenvalues.first().copied().unwrap_or(0.0),
            Normalization::Trace => self.trace,
        };
        self.eigenvalues.iter().map(|l| if denom > 0.0 { l / denom } else { 0.0 }).collect()
    }

    /// Build from parts; used when reading a stored spectrum.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: Matrix, weights: Vec<f64>, trace: f64) -> Result<Self> {
        if vectors.rows() != eigenvalues.len() || vectors.cols() != weights.len() {
            return Err(Error::mismatch("spectrum parts have inconsistent sizes"));
        }
        Ok(Self { eigenvalues, vectors, weights, trace, clipped: 0.0, lanczos_fallback: false })
    }
}

/// Leading `count` eigenpairs of the weighted covariance operator.
pub fn nystrom_eig(cov: &CovMatrix, rule: &TimeRule, count: usize, method: EigenMethod) -> Result<Spectrum> {
    let n = cov.dim();
    if rule.len() != n {
        return Err(Error::mismatch("covariance and time grid sizes differ"));
    }
    if count == 0 || count > n {
        return Err(Error::invalid("requested eigenpair count must be in 1..=N_quad"));
    }
    let w = rule.weights();
    if w.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("time weights must be positive"));
    }
    let sw: Vec<f64> = w.iter().map(|&x| math::sqrt(x)).collect();
    let a = Matrix::from_fn(n, n, |i, j| sw[i] * cov.k[(i, j)] * sw[j]);

    let use_lanczos = match method {
        EigenMethod::Dense => false,
        EigenMethod::Lanczos => true,
        EigenMethod::Auto => n >= 200 && 4 * count <= n,
    };
    let mut lanczos_fallback = false;
    let (vals, us) = if use_lanczos {
        match lanczos(&a, count) {
            Some(r) => r,
            None => {
                lanczos_fallback = true;
                dense_top(&a, count)?
            }
        }
    } else {
        dense_top(&a, count)?
    };

    let lambda1 = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut clipped = 0.0f64;
    let mut eigenvalues = Vec::with_capacity(count);
    for &l in &vals {
        if l < 0.0 {
            if l < -NEGATIVE_TOL * lambda1 {
                return Err(Error::NegativeEigenvalue { value: l, threshold: -NEGATIVE_TOL * lambda1 });
            }
            clipped = clipped.max(-l);
            eigenvalues.push(0.0);
        } else {
            eigenvalues.push(l);
        }
    }
    let vectors = Matrix::from_fn(count, n, |i, m| us[(i, m)] / sw[m]);
    Ok(Spectrum {
        eigenvalues,
        vectors,
        weights: w.to_vec(),
        trace: cov.weighted_trace(rule),
        clipped,
        lanczos_fallback,
    })
}

fn dense_top(a: &Matrix, count: usize) -> Result<(Vec<f64>, Matrix)> {
    let (mut vals, vecs) = symmetric_eigen(a)?;
    // The most negative values matter for the clip check even when not returned.
    let most_negative = vals.last().copied().unwrap_or(0.0);
    vals.truncate(count);
    let top = Matrix::from_fn(count, a.cols(), |i, m| vecs[(i, m)]);
    check_negative_tail(&vals, most_negative)?;
    Ok((vals, top))
}

fn check_negative_tail(vals: &[f64], most_negative: f64) -> Result<()> {
    let lambda1 = vals.first().copied().unwrap_or(0.0).max(0.0);
    if most_negative < -NEGATIVE_TOL * lambda1 {
        return Err(Error::NegativeEigenvalue { value: most_negative, threshold: -NEGATIVE_TOL * lambda1 });
    }
    Ok(())
}

/// Lanczos with full reorthogonalization. Returns `None` if the leading `count`
/// Ritz pairs do not reach the residual test before the Krylov space is exhausted.
fn lanczos(a: &Matrix, count: usize) -> Option<(Vec<f64>, Matrix)> {
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b4c);
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        let mut vecs = Matrix::zeros(count, n);
        for i in 0..count {
            vecs[(i, i)] = 1.0;
        }
        return Some((vec![0.0; count], vecs));
    }

    let mut target = n.min((2 * count + 20).max(40));
    let mut v = random_unit(&mut rng, n, &q)?;
    loop {
        while q.len() < target {
            q.push(v.clone());
            let mut r = a.matvec(&v);
            let al = dot(&r, &v);
            alpha.push(al);
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(&r, qi);
                    axpy(-c, qi, &mut r);
                }
            }
            let b = norm2(&r);
            if q.len() == n {
                break;
            }
            if b <= 1e-13 * scale {
                // Invariant subspace found: restart with a fresh orthogonal direction.
                beta.push(0.0);
                v = random_unit(&mut rng, n, &q)?;
            } else {
                beta.push(b);
                v = r.iter().map(|x| x / b).collect();
            }
        }
        let m = q.len();
        let (theta, s) = tridiagonal_eigen(&alpha, &beta[..m - 1]).ok()?;
        let last_beta = if m == n { 0.0 } else { beta.get(m - 1).copied().unwrap_or(0.0) };
        let theta1 = theta[0].abs().max(1e-300);
        let converged = (0..count).all(|i| last_beta * math::abs(s[(i, m - 1)]) <= 1e-12 * theta1);
        if converged {
            let mut vecs = Matrix::zeros(count, n);
            for i in 0..count {
                let row = vecs.row_mut(i);
                for (j, qj) in q.iter().enumerate() {
                    axpy(s[(i, j)], qj, row);
                }
            }
            return Some((theta[..count].to_vec(), vecs));
        }
        if m == n {
            return None;
        }
        target = n.min(2 * m);
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, q: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for qi in q {
                let c = dot(&v, qi);
                axpy(-c, qi, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-8 {
            return Some(v.iter().map(|x| x / nv).collect());
        }
    }
    None
}

/// Discretized KL modes `f_i(xi^(k)) = sum_m w_m f_c(t_m, xi^(k)) e_i^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlModes {
    /// `N_kl x N`.
    pub modes: Matrix,
}

impl KlModes {
    pub fn n_modes(&self) -> usize {
        self.modes.rows()
    }

    pub fn mode(&self, i: usize) -> &[f64] {
        self.modes.row(i)
    }
}

pub fn kl_modes(ensemble: &Ensemble, spectrum: &Spectrum, nkl: usize) -> Result<KlModes> {
    if !ensemble.is_centered() {
        return Err(Error::NotCentered);
    }
    if nkl == 0 || nkl > spectrum.len() {
        return Err(Error::invalid("N_kl must be in 1..=number of eigenpairs"));
    }
    if ensemble.n_times() != spectrum.weights().len() {
        return Err(Error::mismatch("ensemble and spectrum grids differ"));
    }
    let w = spectrum.weights();
    let we = Matrix::from_fn(nkl, w.len(), |i, m| w[m] * spectrum.vectors[(i, m)]);
    let n = ensemble.n_samples();
    let mut modes = Matrix::zeros(nkl, n);
    for k in 0..n {
        let f = ensemble.trajectory(k);
        for i in 0..nkl {
            modes[(i, k)] = dot(we.row(i), f);
        }
    }
    Ok(KlModes { modes })
}

/// Fraction of the total variance carried by the first `nkl` modes.
pub fn variance_ratio(spectrum: &Spectrum, nkl: usize) -> Result<f64> {
    if nkl == 0 {
        return Err(Error::invalid("N_kl must be at least 1"));
    }
    if !(spectrum.trace > 0.0) {
        return Err(Error::degenerate("covariance has zero trace"));
    }
    let kept: f64 = spectrum.eigenvalues.iter().take(nkl).sum();
    Ok((kept / spectrum.trace).min(1.0))
}

/// `sum_{i <= nkl} lambda_i (e_i^m)^2`.
pub fn truncated_pointwise_variance(spectrum: &Spectrum, nkl: usize, m: usize) -> f64 {
    (0..nkl.min(spectrum.len()))
        .map(|i| spectrum.eigenvalues[i] * spectrum.vectors[(i, m)] * spectrum.vectors[(i, m)])
        .sum()
}

/// `f(t_m, xi) ~ f_0(t_m) + sum_i f_i(xi) e_i^m`, defined on grid nodes only.
#[derive(Debug, Clone, PartialEq)]
pub struct KlSurrogate {
    time_rule: TimeRule,
    mean: Vec<f64>,
    vectors: Matrix,
    modes: Vec<PcExpansion>,
}

pub fn build_kl_surrogate(
    ensemble: &Ensemble,
    spectrum: &Spectrum,
    mode_surrogates: Vec<PcExpansion>,
) -> Result<KlSurrogate> {
    KlSurrogate::new(ensemble.time_rule().clone(), ensemble.mean().to_vec(), spectrum, mode_surrogates)
}

impl KlSurrogate {
    pub fn new(time_rule: TimeRule, mean: Vec<f64>, spectrum: &Spectrum, modes: Vec<PcExpansion>) -> Result<Self> {
        if modes.is_empty() || modes.len() > spectrum.len() {
            return Err(Error::invalid("need one surrogate per retained mode"));
        }
        if mean.len() != time_rule.len() || spectrum.weights().len() != time_rule.len() {
            return Err(Error::mismatch("surrogate parts use different grids"));
        }
        let np = modes[0].basis().np();
        if modes.iter().any(|e| e.basis().np() != np) {
            return Err(Error::mismatch("mode surrogates have different dimensions"));
        }
        let vectors = Matrix::from_fn(modes.len(), time_rule.len(), |i, m| spectrum.vectors[(i, m)]);
        Ok(Self { time_rule, mean, vectors, modes })
    }

    pub fn time_rule(&self) -> &TimeRule {
        &self.time_rule
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn modes(&self) -> &[PcExpansion] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn eval_node(&self, m: usize, xi: &[f64]) -> f64 {
        let mut v = self.mean[m];
        for (i, e) in self.modes.iter().enumerate() {
            v += e.eval(xi) * self.vectors[(i, m)];
        }
        v
    }

    /// Value at time `t`, which must be a grid node.
    pub fn eval(&self, t: f64, xi: &[f64]) -> Result<f64> {
        let m = self.time_rule.node_index(t)?;
        Ok(self.eval_node(m, xi))
    }

    pub fn eval_trajectory(&self, xi: &[f64]) -> Vec<f64> {
        let fi: Vec<f64> = self.modes.iter().map(|e| e.eval(xi)).collect();
        let mut out = self.mean.clone();
        for (i, f) in fi.iter().enumerate() {
            axpy(*f, self.vectors.row(i), &mut out);
        }
        out
    }

    /// Equivalent per-node expansion `c_k(t_m) = delta_k0 f_0(t_m) + sum_i c_{i,k} e_i^m`.
    /// Requires every mode to share one basis.
    pub fn to_pce_trajectory(&self) -> Result<PceTrajectory> {
        let basis = self.modes[0].basis();
        if self.modes.iter().any(|e| e.basis() != basis) {
            return Err(Error::mismatch("mode surrogates use different bases"));
        }
        let n = self.time_rule.len();
        let mut coeffs = Matrix::zeros(n, basis.len());
        for m in 0..n {
            let row = coeffs.row_mut(m);
            for (i, e) in self.modes.iter().enumerate() {
                axpy(self.vectors[(i, m)], e.coeffs(), row);
            }
            row[0] += self.mean[m];
        }
        PceTrajectory::new(basis.clone(), coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{draw_samples, evaluate_ensemble, CovEstimator, SampleSet};
    use crate::models::FnProcess;
    use crate::pce::{nisp_project, total_degree_basis};
    use crate::quadrature::{gauss_legendre, tensor_rule};
    use crate::Sequential;

    fn rank_one_cov(rule: &TimeRule) -> CovMatrix {
        let t = rule.nodes();
        let k = Matrix::from_fn(t.len(), t.len(), |i, j| libm::sin(t[i]) * libm::sin(t[j]) / 3.0);
        CovMatrix::new(k, CovEstimator::Quadrature { n: 0 }).unwrap()
    }

    fn check_w_orthonormal(s: &Spectrum) {
        let w = s.weights();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let ip: f64 = (0..w.len()).map(|m| w[m] * s.vector(i)[m] * s.vector(j)[m]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() <= 1e-8, "<e{i}, e{j}>_W = {ip}");
            }
        }
    }

    #[test]
    fn rank_one_spectrum() {
        let rule = TimeRule::uniform(3.0, 0.05).unwrap();
        let cov = rank_one_cov(&rule);
        let want: f64 = rule.integrate(&rule.nodes().iter().map(|t| libm::sin(*t).powi(2)).collect::<Vec<_>>()) / 3.0;
        let s = nystrom_eig(&cov, &rule, rule.len(), EigenMethod::Dense).unwrap();
        assert!((s.eigenvalues()[0] - want).abs() < 1e-12 * want);
        assert!(s.eigenvalues()[1..].iter().all(|&l| l <= 1e-10 * want));
        check_w_orthonormal(&s);
    }

    #[test]
    fn zero_covariance_spectrum() {
        let rule = TimeRule::uniform(1.0, 0.1).unwrap();
        let cov = CovMatrix::new(Matrix::zeros(11, 11), CovEstimator::Sample { n: 2 }).unwrap();
        for method in [EigenMethod::Dense, EigenMethod::Lanczos] {
            let s = nystrom_eig(&cov, &rule, 3, method).unwrap();
            assert!(s.eigenvalues().iter().all(|&l| l == 0.0));
            assert!(variance_ratio(&s, 1).is_err());
        }
    }

    fn smooth_ensemble(n: usize, seed: u64, rule: &TimeRule) -> Ensemble {
        let model = FnProcess::new(3, |t, xi: &[f64]| {
            libm::exp(-(0.5 + 0.1 * xi[0]) * t) * libm::cos((3.0 + 0.5 * xi[1]) * t) * (1.0 + 0.2 * xi[2])
        });
        let s = draw_samples(3, n, seed).unwrap();
        evaluate_ensemble(&model, &s, rule, &Sequential).unwrap().center().unwrap()
    }

    #[test]
    fn trace_identity_and_full_diagonal() {
        let rule = TimeRule::uniform(4.0, 0.05).unwrap();
        let e = smooth_ensemble(300, 2, &rule);
        let cov = e.sample_covariance(&Sequential).unwrap();
        let s = nystrom_eig(&cov, &rule, rule.len(), EigenMethod::Dense).unwrap();
        let sum: f64 = s.eigenvalues().iter().sum();
        assert!((sum - s.trace()).abs() <= 1e-8 * s.trace());
        assert!((variance_ratio(&s, s.len()).unwrap() - 1.0).abs() < 1e-8);
        let mut prev = 0.0;
        for nkl in 1..=s.len() {
            let r = variance_ratio(&s, nkl).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        for m in 0..rule.len() {
            let full = truncated_pointwise_variance(&s, s.len(), m);
            assert!((full - cov.k[(m, m)]).abs() <= 1e-8 * cov.k[(m, m)].max(1e-12));
            assert!(truncated_pointwise_variance(&s, 3, m) <= truncated_pointwise_variance(&s, 4, m) + 1e-15);
        }
        check_w_orthonormal(&s);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let rule = TimeRule::uniform(10.0, 0.02).unwrap();
        let e = smooth_ensemble(200, 5, &rule);
        let cov = e.sample_covariance(&Sequential).unwrap();
        let dense = nystrom_eig(&cov, &rule, 10, EigenMethod::Dense).unwrap();
        let lz = nystrom_eig(&cov, &rule, 10, EigenMethod::Lanczos).unwrap();
        assert!(!lz.lanczos_fallback());
        for (a, b) in dense.eigenvalues().iter().zip(lz.eigenvalues()) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-14 * dense.eigenvalues()[0]), "{a} vs {b}");
        }
        check_w_orthonormal(&lz);
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let rule = TimeRule::uniform(1.0, 0.5).unwrap();
        let k = Matrix::from_row_major(3, 3, vec![1.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.2]).unwrap();
        let cov = CovMatrix::new(k, CovEstimator::Sample { n: 2 }).unwrap();
        assert!(matches!(nystrom_eig(&cov, &rule, 1, EigenMethod::Dense), Err(Error::NegativeEigenvalue { .. })));
    }

    #[test]
    fn rank_one_modes_track_amplitude() {
        let rule = TimeRule::uniform(3.0, 0.05).unwrap();
        let model = FnProcess::new(1, |t, xi: &[f64]| xi[0] * libm::sin(t));
        let s = draw_samples(1, 400, 3).unwrap();
        let e = evaluate_ensemble(&model, &s, &rule, &Sequential).unwrap().center().unwrap();
        let cov = e.sample_covariance(&Sequential).unwrap();
        let spec = nystrom_eig(&cov, &rule, 3, EigenMethod::Dense).unwrap();
        let modes = kl_modes(&e, &spec, 3).unwrap();
        let a: Vec<f64> = (0..400).map(|k| s.point(k)[0]).collect();
        let f1 = modes.mode(0);
        let (ma, mf) = (a.iter().sum::<f64>() / 400.0, f1.iter().sum::<f64>() / 400.0);
        let cov_af: f64 = a.iter().zip(f1).map(|(x, y)| (x - ma) * (y - mf)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vf: f64 = f1.iter().map(|y| (y - mf) * (y - mf)).sum();
        assert!((cov_af / (va * vf).sqrt()).abs() >= 0.999);
        let scale = f1.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 1..3 {
            assert!(modes.mode(i).iter().all(|x| x.abs() < 1e-6 * scale));
        }
    }

    #[test]
    fn modes_need_centered_ensemble() {
        let rule = TimeRule::uniform(1.0, 0.1).unwrap();
        let model = FnProcess::new(1, |_, _| 0.0);
        let s = draw_samples(1, 5, 1).unwrap();
        let e = evaluate_ensemble(&model, &s, &rule, &Sequential).unwrap();
        let cov = CovMatrix::new(Matrix::zeros(11, 11), CovEstimator::Sample { n: 5 }).unwrap();
        let spec = nystrom_eig(&cov, &rule, 2, EigenMethod::Dense).unwrap();
        assert!(matches!(kl_modes(&e, &spec, 1), Err(Error::NotCentered)));
        let e = e.center().unwrap();
        let modes = kl_modes(&e, &spec, 2).unwrap();
        assert!(modes.modes.as_slice().iter().all(|&x| x == 0.0));
    }

    fn quadrature_surrogate(model: &FnProcess<impl Fn(f64, &[f64]) -> f64 + Sync>) -> (KlSurrogate, Ensemble) {
        let rule = TimeRule::uniform(2.0, 0.1).unwrap();
        let prule = tensor_rule(&gauss_legendre(4).unwrap(), 2).unwrap();
        let samples = SampleSet::from_rule(&prule);
        let e = evaluate_ensemble(model, &samples, &rule, &Sequential).unwrap().center().unwrap();
        let cov = e.sample_covariance(&Sequential).unwrap();
        let spec = nystrom_eig(&cov, &rule, rule.len(), EigenMethod::Dense).unwrap();
        let modes = kl_modes(&e, &spec, rule.len()).unwrap();
        let basis = total_degree_basis(2, 3).unwrap();
        let pces = (0..modes.n_modes()).map(|i| nisp_project(modes.mode(i), &prule, &basis).unwrap()).collect();
        (build_kl_surrogate(&e, &spec, pces).unwrap(), e)
    }

    #[test]
    fn surrogate_reproduces_training_values() {
        let model =
            FnProcess::new(2, |t, xi: &[f64]| xi[0] * libm::sin(t) + xi[1] * xi[1] * libm::cos(t) + xi[0] * xi[1] * t);
        let (sur, e) = quadrature_surrogate(&model);
        for k in 0..e.n_samples() {
            let xi = e.samples().point(k);
            let traj = sur.eval_trajectory(xi);
            for m in 0..e.n_times() {
                let want = e.value(m, k) + e.mean()[m];
                assert!((traj[m] - want).abs() < 1e-8);
                assert!((sur.eval_node(m, xi) - want).abs() < 1e-8);
            }
        }
        let as_pce = sur.to_pce_trajectory().unwrap();
        let xi = [0.3, -0.7];
        assert!((as_pce.eval(7, &xi) - sur.eval_node(7, &xi)).abs() < 1e-12);
        assert!(matches!(sur.eval(0.05, &xi), Err(Error::OffGrid { .. })));
        assert!(sur.eval(0.5, &xi).is_ok());
    }

    #[test]
    fn constant_process_surrogate_is_mean() {
        let model = FnProcess::new(2, |t, _xi: &[f64]| 1.0 + t * t);
        let (sur, e) = quadrature_surrogate(&model);
        for m in 0..e.n_times() {
            assert!((sur.eval_node(m, &[0.9, -0.1]) - e.mean()[m]).abs() < 1e-12);
        }
    }
}
