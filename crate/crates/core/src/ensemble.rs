//! Ensembles of process evaluations on a time grid, centering and covariance
//! estimation by sampling or by parameter-space quadrature.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batch::Batch;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::Process;
use crate::quadrature::{ParamRule, TimeRule};

/// How a sample set was produced, which fixes how averages are formed.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleScheme {
    /// Independent uniform draws; averages use `1/N` and covariances `1/(N-1)`.
    MonteCarlo { seed: u64 },
    /// Quadrature nodes with weights `nu_j` summing to one.
    Quadrature { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<f64>,
    scheme: SampleScheme,
}

/// `n` i.i.d. uniform draws on `[-1, 1]^np` from a ChaCha8 stream seeded with `seed`.
pub fn draw_samples(np: usize, n: usize, seed: u64) -> Result<SampleSet> {
    if np == 0 || n == 0 {
        return Err(Error::invalid("draw_samples needs np >= 1 and n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..np * n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(SampleSet { dim: np, points, scheme: SampleScheme::MonteCarlo { seed } })
}

impl SampleSet {
    pub fn from_rule(rule: &ParamRule) -> Self {
        Self {
            dim: rule.dim(),
            points: rule.points().to_vec(),
            scheme: SampleScheme::Quadrature { weights: rule.weights().to_vec() },
        }
    }

    /// Wrap externally produced points (e.g. from a file).
    pub fn from_parts(dim: usize, points: Vec<f64>, scheme: SampleScheme) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::mismatch("sample points are not a multiple of dim"));
        }
        if points.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::invalid("sample point outside [-1, 1]"));
        }
        if let SampleScheme::Quadrature { weights } = &scheme {
            if weights.len() * dim != points.len() {
                return Err(Error::mismatch("quadrature weights do not match sample count"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::invalid("quadrature weights must sum to one"));
            }
        }
        Ok(Self { dim, points, scheme })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn scheme(&self) -> &SampleScheme {
        &self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        match self.scheme {
            SampleScheme::MonteCarlo { seed } => Some(seed),
            SampleScheme::Quadrature { .. } => None,
        }
    }

    pub fn is_quadrature(&self) -> bool {
        matches!(self.scheme, SampleScheme::Quadrature { .. })
    }

    /// Weights used for means: `1/N` or the quadrature weights.
    pub fn mean_weights(&self) -> Vec<f64> {
        match &self.scheme {
            SampleScheme::MonteCarlo { .. } => vec![1.0 / self.len() as f64; self.len()],
            SampleScheme::Quadrature { weights } => weights.clone(),
        }
    }

    /// As a parameter rule (quadrature sets only).
    pub fn as_rule(&self) -> Result<ParamRule> {
        match &self.scheme {
            SampleScheme::Quadrature { weights } => ParamRule::new(self.dim, self.points.clone(), weights.clone()),
            SampleScheme::MonteCarlo { .. } => Err(Error::invalid("Monte Carlo samples are not a quadrature rule")),
        }
    }
}

/// Model evaluations `f(t_m, xi^(k))` with their mean trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    time_rule: TimeRule,
    samples: SampleSet,
    /// One trajectory per row (`N x N_quad`).
    trajectories: Matrix,
    mean: Vec<f64>,
    centered: bool,
}

/// Evaluate `model` at every sample on the nodes of `time_rule`.
pub fn evaluate_ensemble<P, B>(model: &P, samples: &SampleSet, time_rule: &TimeRule, batch: &B) -> Result<Ensemble>
where
    P: Process + ?Sized,
    B: Batch,
{
    if model.n_params() != samples.dim() {
        return Err(Error::mismatch("model and sample dimensions differ"));
    }
    let times = time_rule.nodes();
    let rows = batch.map(samples.len(), |k| {
        let mut out = vec![0.0; times.len()];
        model.trajectory(samples.point(k), times, &mut out).map(|_| out).map_err(|e| Error::Sample {
            index: k,
            xi: samples.point(k).to_vec(),
            source: Box::new(e),
        })
    });
    let mut data = Vec::with_capacity(samples.len() * times.len());
    for row in rows {
        data.extend_from_slice(&row?);
    }
    let trajectories = Matrix::from_row_major(samples.len(), times.len(), data)?;
    Ensemble::new(time_rule.clone(), samples.clone(), trajectories)
}

impl Ensemble {
    /// Build from precomputed trajectories (one row per sample).
    pub fn new(time_rule: TimeRule, samples: SampleSet, trajectories: Matrix) -> Result<Self> {
        if trajectories.rows() != samples.len() || trajectories.cols() != time_rule.len() {
            return Err(Error::mismatch("trajectory matrix does not match samples x grid"));
        }
        let mean = weighted_mean(&trajectories, &samples.mean_weights());
        Ok(Self { time_rule, samples, trajectories, mean, centered: false })
    }

    pub fn time_rule(&self) -> &TimeRule {
        &self.time_rule
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.trajectories.rows()
    }

    pub fn n_times(&self) -> usize {
        self.trajectories.cols()
    }

    /// `f(t_m, xi^(k))` (centered if the ensemble is centered).
    #[inline]
    pub fn value(&self, m: usize, k: usize) -> f64 {
        self.trajectories[(k, m)]
    }

    pub fn trajectory(&self, k: usize) -> &[f64] {
        self.trajectories.row(k)
    }

    pub fn trajectories(&self) -> &Matrix {
        &self.trajectories
    }

    /// Mean trajectory of the uncentered process.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Subtract the mean trajectory. The mean is kept for later reconstruction.
    pub fn center(mut self) -> Result<Ensemble> {
        if self.centered {
            return Err(Error::AlreadyCentered);
        }
        for k in 0..self.trajectories.rows() {
            for (v, m) in self.trajectories.row_mut(k).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        self.centered = true;
        Ok(self)
    }

    /// Values at time node `m` across samples.
    pub fn values_at(&self, m: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|k| self.value(m, k)).collect()
    }

    /// Covariance matrix `K_lm` of a centered ensemble.
    ///
    /// Monte Carlo: `1/(N-1) sum_k f_c f_c^T`; quadrature: `sum_j nu_j f_c f_c^T`.
    pub fn sample_covariance<B: Batch>(&self, batch: &B) -> Result<CovMatrix> {
        if !self.centered {
            return Err(Error::NotCentered);
        }
        let n = self.n_samples();
        let (scales, estimator) = match self.samples.scheme() {
            SampleScheme::MonteCarlo { .. } => {
                if n < 2 {
                    return Err(Error::invalid("Monte Carlo covariance needs N >= 2"));
                }
                (vec![1.0 / (n as f64 - 1.0); n], CovEstimator::Sample { n })
            }
            SampleScheme::Quadrature { weights } => (weights.clone(), CovEstimator::Quadrature { n }),
        };
        let nt = self.n_times();
        const BLOCK: usize = 16;
        let blocks = nt.div_ceil(BLOCK);
        let parts = batch.map(blocks, |b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(nt);
            let mut rows = vec![0.0; (hi - lo) * nt];
            for (k, &s) in scales.iter().enumerate() {
                let f = self.trajectories.row(k);
                for i in lo..hi {
                    let a = s * f[i];
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut rows[(i - lo) * nt..(i - lo + 1) * nt];
                    for j in i..nt {
                        row[j] += a * f[j];
                    }
                }
            }
            rows
        });
        let mut data = Vec::with_capacity(nt * nt);
        for p in parts {
            data.extend_from_slice(&p);
        }
        let mut k = Matrix::from_row_major(nt, nt, data)?;
        k.mirror_upper();
        Ok(CovMatrix { k, estimator })
    }
}

fn weighted_mean(trajectories: &Matrix, weights: &[f64]) -> Vec<f64> {
    let mut mean = vec![0.0; trajectories.cols()];
    for (k, &w) in weights.iter().enumerate() {
        crate::linalg::axpy(w, trajectories.row(k), &mut mean);
    }
    // Nodes where every sample agrees center to exact zeros.
    if trajectories.rows() > 0 {
        let first = trajectories.row(0);
        for (m, mu) in mean.iter_mut().enumerate() {
            if (1..trajectories.rows()).all(|k| trajectories.row(k)[m] == first[m]) {
                *mu = first[m];
            }
        }
    }
    mean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovEstimator {
    Sample { n: usize },
    Quadrature { n: usize },
}

/// Discretized covariance function `K_lm ~ c(t_l, t_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub k: Matrix,
    pub estimator: CovEstimator,
}

impl CovMatrix {
    pub fn new(k: Matrix, estimator: CovEstimator) -> Result<Self> {
        if k.rows() != k.cols() {
            return Err(Error::mismatch("covariance matrix must be square"));
        }
        Ok(Self { k, estimator })
    }

    pub fn dim(&self) -> usize {
        self.k.rows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|m| self.k[(m, m)]).collect()
    }

    /// `sum_m w_m K_mm`, the trace of the weighted operator.
    pub fn weighted_trace(&self, rule: &TimeRule) -> f64 {
        rule.integrate(&self.diagonal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnProcess;
    use crate::quadrature::{gauss_legendre, tensor_rule};
    use crate::Sequential;

    fn grid() -> TimeRule {
        TimeRule::uniform(3.0, 0.25).unwrap()
    }

    #[test]
    fn draws_are_reproducible_and_in_range() {
        let a = draw_samples(3, 100, 9).unwrap();
        let b = draw_samples(3, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|x| x.abs() <= 1.0));
        assert_ne!(a, draw_samples(3, 100, 10).unwrap());
    }

    #[test]
    fn sample_means_obey_clt_bound() {
        let n = 10_000;
        let s = draw_samples(3, n, 2024).unwrap();
        for d in 0..3 {
            let m: f64 = (0..n).map(|k| s.point(k)[d]).sum::<f64>() / n as f64;
            assert!(m.abs() < 3.5 / (n as f64).sqrt(), "coordinate {d} mean {m}");
        }
    }

    #[test]
    fn identity_in_time_model() {
        let rule = grid();
        let s = draw_samples(2, 5, 1).unwrap();
        let e = evaluate_ensemble(&FnProcess::new(2, |t, _| t), &s, &rule, &Sequential).unwrap();
        for k in 0..5 {
            assert_eq!(e.trajectory(k), rule.nodes());
        }
        for (m, t) in e.mean().iter().zip(rule.nodes()) {
            assert!((m - t).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_model_on_symmetric_rule_has_zero_mean() {
        let rule = tensor_rule(&gauss_legendre(4).unwrap(), 2).unwrap();
        let s = SampleSet::from_rule(&rule);
        let e = evaluate_ensemble(&FnProcess::new(2, |_, x| x[0]), &s, &grid(), &Sequential).unwrap();
        assert!(e.mean().iter().all(|m| m.abs() < 1e-14));
    }

    #[test]
    fn centering_contract() {
        let s = draw_samples(2, 50, 5).unwrap();
        let e = evaluate_ensemble(&FnProcess::new(2, |t, x| 3.0 + t * x[0] + x[1]), &s, &grid(), &Sequential).unwrap();
        let mean = e.mean().to_vec();
        let c = e.center().unwrap();
        assert_eq!(c.mean(), &mean[..]);
        for m in 0..c.n_times() {
            let avg: f64 = c.values_at(m).iter().sum::<f64>() / 50.0;
            assert!(avg.abs() < 1e-12);
        }
        assert_eq!(c.clone().center().unwrap_err(), Error::AlreadyCentered);

        // A zero-mean ensemble is unchanged by centering.
        let z = Ensemble::new(c.time_rule().clone(), c.samples().clone(), c.trajectories().clone()).unwrap();
        let zc = z.clone().center().unwrap();
        for k in 0..z.n_samples() {
            for (a, b) in z.trajectory(k).iter().zip(zc.trajectory(k)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_node_centers_to_exact_zero() {
        let s = draw_samples(1, 37, 2).unwrap();
        let e = evaluate_ensemble(&FnProcess::new(1, |t, x| 0.1 + t * x[0]), &s, &grid(), &Sequential).unwrap();
        assert_eq!(e.mean()[0], 0.1);
        let c = e.center().unwrap();
        assert!(c.values_at(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_one_quadrature_covariance() {
        let rule = TimeRule::uniform(2.0, 0.1).unwrap();
        let q = tensor_rule(&gauss_legendre(3).unwrap(), 1).unwrap();
        let e =
            evaluate_ensemble(&FnProcess::new(1, |t, x| x[0] * t.sin()), &SampleSet::from_rule(&q), &rule, &Sequential)
                .unwrap()
                .center()
                .unwrap();
        let k = e.sample_covariance(&Sequential).unwrap();
        let t = rule.nodes();
        for l in 0..t.len() {
            for m in 0..t.len() {
                let want = t[l].sin() * t[m].sin() / 3.0;
                assert!((k.k[(l, m)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_trajectories_give_zero_covariance() {
        let s = draw_samples(2, 20, 5).unwrap();
        let e =
            evaluate_ensemble(&FnProcess::new(2, |t, _| t * t), &s, &grid(), &Sequential).unwrap().center().unwrap();
        let k = e.sample_covariance(&Sequential).unwrap();
        assert!(k.k.as_slice().iter().all(|v| v.abs() < 1e-24));
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let s = draw_samples(2, 40, 77).unwrap();
        let e =
            evaluate_ensemble(&FnProcess::new(2, |t, x| (t * x[0]).sin() + x[1] * x[1] * t), &s, &grid(), &Sequential)
                .unwrap()
                .center()
                .unwrap();
        let k = e.sample_covariance(&Sequential).unwrap();
        assert_eq!(k.k.max_asymmetry(), 0.0);
        let norm = k.k.frobenius_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v: Vec<f64> = (0..k.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let kv = k.k.matvec(&v);
            let q = crate::linalg::dot(&v, &kv);
            assert!(q >= -1e-10 * crate::linalg::dot(&v, &v) * norm);
        }
        assert!(matches!(
            evaluate_ensemble(&FnProcess::new(2, |t, _| t), &s, &grid(), &Sequential)
                .unwrap()
                .sample_covariance(&Sequential),
            Err(Error::NotCentered)
        ));
    }

    #[test]
    fn monte_carlo_covariance_converges() {
        // rank-1 process xi_1 sin t; exact K = sin t_l sin t_m / 3
        let rule = TimeRule::uniform(3.0, 0.1).unwrap();
        let t = rule.nodes();
        let exact = Matrix::from_fn(t.len(), t.len(), |l, m| t[l].sin() * t[m].sin() / 3.0);
        let mut errs: Vec<f64> = (0..10)
            .map(|seed| {
                let s = draw_samples(1, 1000, seed).unwrap();
                let e = evaluate_ensemble(&FnProcess::new(1, |t, x| x[0] * t.sin()), &s, &rule, &Sequential)
                    .unwrap()
                    .center()
                    .unwrap();
                let k = e.sample_covariance(&Sequential).unwrap();
                let diff = Matrix::from_fn(t.len(), t.len(), |l, m| k.k[(l, m)] - exact[(l, m)]);
                diff.frobenius_norm() / exact.frobenius_norm()
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(errs[5] <= 0.15, "median relative error {}", errs[5]);
    }
}
