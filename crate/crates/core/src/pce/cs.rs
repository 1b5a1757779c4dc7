//! Compressive-sensing regression: `min ||Lambda c - d||_2^2` subject to `||c||_1 <= tau`.
//!
//! Solved by projected gradient with Barzilai-Borwein steps, an exact line search
//! along the projected direction and exact projection onto the l1 ball. Everything
//! runs on the Gram form `G = Lambda^T Lambda`, `b = Lambda^T d`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{PcBasis, PcExpansion};
use crate::error::{Error, Result};
use crate::linalg::{axpy, cholesky_solve, dot, norm1, norm2, Matrix};
use crate::math;

/// l1 radius choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Fixed(f64),
    /// Chosen by k-fold cross-validation.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsConfig {
    pub tau: Tau,
    pub cv_folds: usize,
    /// Relative tolerance on the projected-gradient norm.
    pub solver_tol: f64,
    pub max_iter: usize,
    /// Number of log-spaced radii tried by cross-validation.
    pub cv_grid: usize,
    /// Seed for the fold shuffle.
    pub seed: u64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self { tau: Tau::Auto, cv_folds: 5, solver_tol: 1e-10, max_iter: 50_000, cv_grid: 14, seed: 0 }
    }
}

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        if let Tau::Fixed(t) = self.tau {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::invalid("tau must be finite and nonnegative"));
            }
        }
        if self.cv_folds < 2 && self.tau == Tau::Auto {
            return Err(Error::invalid("cross-validation needs at least 2 folds"));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::invalid("solver_tol must be positive"));
        }
        if self.max_iter == 0 || self.cv_grid < 2 {
            return Err(Error::invalid("max_iter must be positive and cv_grid at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Solution {
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `||P(c - grad) - c||_2` at exit.
    pub pg_norm: f64,
    /// `||Lambda c - d||_2` at exit.
    pub residual: f64,
}

/// Euclidean projection onto `{x : ||x||_1 <= tau}` (sort-based simplex projection).
pub fn project_l1_ball(v: &[f64], tau: f64, out: &mut [f64]) {
    if norm1(v) <= tau {
        out.copy_from_slice(v);
        return;
    }
    if tau <= 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|x| math::abs(*x)).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - tau) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        let m = math::abs(x) - theta;
        *o = if m > 0.0 { m.copysign(x) } else { 0.0 };
    }
}

fn residual_from_gram(b: &[f64], d_norm_sq: f64, c: &[f64], gc: &[f64]) -> f64 {
    math::sqrt((dot(c, gc) - 2.0 * dot(b, c) + d_norm_sq).max(0.0))
}

const POLISH_EVERY: usize = 16;

/// `1/2 c^T G c - b^T c`.
fn objective(b: &[f64], c: &[f64], gc: &[f64]) -> f64 {
    0.5 * dot(c, gc) - dot(b, c)
}

/// Primal active-set refinement started from the support and signs of `c`.
///
/// Each pass minimizes the objective on the current face (with the ball
/// constraint active or not), walks toward that minimizer until a coefficient
/// reaches zero or the ball boundary is hit, and otherwise adds the variable
/// that violates optimality the most. Returns the point reached and whether it
/// passed the optimality check, or `None` if a face system is singular.
fn polish(gram: &Matrix, b: &[f64], tau: f64, c: &[f64], kkt_tol: f64) -> Option<(Vec<f64>, bool)> {
    let p = c.len();
    let mut c = c.to_vec();
    let mut support: Vec<usize> = (0..p).filter(|&i| c[i] != 0.0).collect();
    let mut sign: Vec<f64> = support.iter().map(|&i| c[i].signum()).collect();
    if support.is_empty() || tau <= 0.0 {
        return None;
    }
    let mut boundary = norm1(&c) >= tau * (1.0 - 1e-9);
    for _ in 0..4 * p + 16 {
        let ns = support.len();
        let gss = Matrix::from_fn(ns, ns, |i, j| gram[(support[i], support[j])]);
        let bs: Vec<f64> = support.iter().map(|&i| b[i]).collect();
        let x1 = cholesky_solve(&gss, &bs).ok()?;
        let mut mu = 0.0;
        let mut target = x1.clone();
        if boundary {
            let x2 = cholesky_solve(&gss, &sign).ok()?;
            let denom = dot(&sign, &x2);
            if !(denom > 0.0) {
                return None;
            }
            mu = (dot(&sign, &x1) - tau) / denom;
            if mu < 0.0 {
                boundary = false;
                mu = 0.0;
            } else {
                target = x1.iter().zip(&x2).map(|(a, b)| a - mu * b).collect();
            }
        }

        let mut step = 1.0f64;
        let mut blocking = None;
        for (k, &i) in support.iter().enumerate() {
            if target[k] * sign[k] <= 0.0 {
                let a = c[i] / (c[i] - target[k]);
                if a < step {
                    step = a;
                    blocking = Some(k);
                }
            }
        }
        let mut hit_ball = false;
        if !boundary {
            let now: f64 = support.iter().zip(&sign).map(|(&i, s)| s * c[i]).sum();
            let end = dot(&sign, &target);
            if end > tau && end > now {
                let a = (tau - now) / (end - now);
                if a < step {
                    step = a.max(0.0);
                    blocking = None;
                    hit_ball = true;
                }
            }
        }
        for (k, &i) in support.iter().enumerate() {
            c[i] += step * (target[k] - c[i]);
        }
        if let Some(k) = blocking {
            c[support[k]] = 0.0;
            support.remove(k);
            sign.remove(k);
            if support.is_empty() {
                return Some((c, false));
            }
            continue;
        }
        if hit_ball {
            boundary = true;
            continue;
        }

        // Face optimum reached: look for the worst optimality violation outside it.
        let gc = gram.matvec(&c);
        let mut worst = kkt_tol;
        let mut enter = None;
        for j in 0..p {
            if c[j] != 0.0 {
                continue;
            }
            let v = math::abs(gc[j] - b[j]) - mu;
            if v > worst {
                worst = v;
                enter = Some(j);
            }
        }
        let Some(j) = enter else {
            return Some((c, true));
        };
        let pos = support.partition_point(|&i| i < j);
        support.insert(pos, j);
        sign.insert(pos, -(gc[j] - b[j]).signum());
    }
    Some((c, false))
}

/// Projected-gradient solve on the Gram form. Never fails; check `converged`.
///
/// `d_norm_sq = ||d||^2` is only used to report the residual.
pub fn solve_l1_ls(
    gram: &Matrix,
    b: &[f64],
    d_norm_sq: f64,
    tau: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> L1Solution {
    let p = b.len();
    let mut c = vec![0.0; p];
    if let Some(w) = warm {
        project_l1_ball(w, tau, &mut c);
    }
    let scale = norm2(b).max(1e-300);
    let mut gc = gram.matvec(&c);
    let mut g: Vec<f64> = gc.iter().zip(b).map(|(x, y)| x - y).collect();
    let max_diag = (0..p).map(|i| gram[(i, i)]).fold(0.0f64, f64::max);
    let mut alpha = if max_diag > 0.0 { 1.0 / max_diag } else { 1.0 };

    let mut trial = vec![0.0; p];
    let mut d = vec![0.0; p];
    let mut pg_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations <= max_iter {
        for i in 0..p {
            trial[i] = c[i] - g[i];
        }
        project_l1_ball(&trial.clone(), tau, &mut trial);
        pg_norm = math::sqrt(trial.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum());
        if pg_norm <= tol * scale {
            converged = true;
            break;
        }
        if iterations == max_iter {
            break;
        }
        iterations += 1;

        for i in 0..p {
            trial[i] = c[i] - alpha * g[i];
        }
        project_l1_ball(&trial.clone(), tau, &mut trial);
        for i in 0..p {
            d[i] = trial[i] - c[i];
        }
        let gd_vec = gram.matvec(&d);
        let dgd = dot(&d, &gd_vec);
        let gtd = dot(&g, &d);
        if gtd >= 0.0 {
            // No descent left at this step size; restart from a safe step.
            alpha = if max_diag > 0.0 { 1.0 / max_diag } else { 1.0 };
            if gtd == 0.0 {
                continue;
            }
        }
        let lambda = if dgd > 0.0 { (-gtd / dgd).min(1.0) } else { 1.0 };
        axpy(lambda, &d, &mut c);
        axpy(lambda, &gd_vec, &mut gc);
        axpy(lambda, &gd_vec, &mut g);
        let dd = dot(&d, &d);
        alpha = if dgd > 0.0 { (dd / dgd).clamp(1e-30, 1e30) } else { 1e30 };

        if iterations % 64 == 0 {
            gc = gram.matvec(&c);
            for i in 0..p {
                g[i] = gc[i] - b[i];
            }
        }
        if iterations % POLISH_EVERY == 0 {
            if let Some((cp, optimal)) = polish(gram, b, tau, &c, 0.1 * tol * scale) {
                let gcp = gram.matvec(&cp);
                // Objective values stop resolving differences near the optimum,
                // so a point that passed the optimality check is taken as is.
                if optimal || objective(b, &cp, &gcp) <= objective(b, &c, &gc) {
                    c = cp;
                    gc = gcp;
                    for i in 0..p {
                        g[i] = gc[i] - b[i];
                    }
                }
            }
        }
    }
    let residual = residual_from_gram(b, d_norm_sq, &c, &gc);
    L1Solution { coeffs: c, iterations, converged, pg_norm, residual }
}

struct Fold {
    test_rows: Vec<usize>,
    train_gram: Matrix,
}

/// Design matrix, Gram matrix and cross-validation folds for one sample set.
///
/// Reused across many right-hand sides (time nodes or KL modes).
pub struct CsProblem {
    basis: PcBasis,
    design: Matrix,
    gram: Matrix,
    folds: Vec<Fold>,
}

impl CsProblem {
    /// `points` holds `np` coordinates per sample. `cv_folds < 2` disables cross-validation.
    pub fn new(basis: &PcBasis, points: &[f64], cv_folds: usize, seed: u64) -> Result<Self> {
        let np = basis.np();
        if points.is_empty() || points.len() % np != 0 {
            return Err(Error::mismatch("sample points do not match the basis dimension"));
        }
        let design = basis.design_matrix(points);
        let gram = design.gram();
        let n = design.rows();
        let mut folds = Vec::new();
        if cv_folds >= 2 {
            if n < cv_folds {
                return Err(Error::invalid("fewer samples than cross-validation folds"));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for f in 0..cv_folds {
                let mut test_rows: Vec<usize> = order.iter().copied().skip(f).step_by(cv_folds).collect();
                test_rows.sort_unstable();
                let test = Matrix::from_fn(test_rows.len(), design.cols(), |i, k| design[(test_rows[i], k)]);
                let held = test.gram();
                let train_gram = Matrix::from_fn(gram.rows(), gram.cols(), |i, j| gram[(i, j)] - held[(i, j)]);
                folds.push(Fold { test_rows, train_gram });
            }
        }
        Ok(Self { basis: basis.clone(), design, gram, folds })
    }

    pub fn basis(&self) -> &PcBasis {
        &self.basis
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn n_samples(&self) -> usize {
        self.design.rows()
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.design.rows() {
            return Err(Error::mismatch("one value per sample expected"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample values must be finite"));
        }
        Ok(())
    }

    /// Solve for a fixed radius and report convergence instead of failing.
    pub fn solve(&self, values: &[f64], tau: f64, cfg: &CsConfig, warm: Option<&[f64]>) -> Result<L1Solution> {
        self.check(values)?;
        let b = self.design.tmatvec(values);
        Ok(solve_l1_ls(&self.gram, &b, dot(values, values), tau, cfg.solver_tol, cfg.max_iter, warm))
    }

    /// Fit with the configured radius; non-convergence is an error.
    pub fn fit(&self, values: &[f64], cfg: &CsConfig) -> Result<PcExpansion> {
        cfg.validate()?;
        let tau = match cfg.tau {
            Tau::Fixed(t) => t,
            Tau::Auto => self.cross_validate(values, cfg)?,
        };
        self.fit_with_tau(values, tau, cfg)
    }

    pub fn fit_with_tau(&self, values: &[f64], tau: f64, cfg: &CsConfig) -> Result<PcExpansion> {
        let sol = self.solve(values, tau, cfg, None)?;
        if !sol.converged {
            return Err(Error::NotConverged { iterations: sol.iterations, residual: sol.residual });
        }
        PcExpansion::new(self.basis.clone(), sol.coeffs)
    }

    /// `||c_ridge||_1` with `lambda = 1e-8 tr(G) / N_PC`.
    pub fn ridge_l1(&self, values: &[f64]) -> Result<f64> {
        self.check(values)?;
        let b = self.design.tmatvec(values);
        let p = self.gram.rows();
        let tr: f64 = (0..p).map(|i| self.gram[(i, i)]).sum();
        let lambda = 1e-8 * tr / p as f64;
        let mut reg = self.gram.clone();
        for i in 0..p {
            reg[(i, i)] += lambda.max(1e-300);
        }
        Ok(norm1(&cholesky_solve(&reg, &b)?))
    }

    /// Log-spaced radii spanning `[1e-3, 10] * ||c_ridge||_1`.
    pub fn tau_grid(&self, values: &[f64], points: usize) -> Result<Vec<f64>> {
        let anchor = self.ridge_l1(values)?;
        if !(anchor > 0.0) {
            return Ok(vec![0.0]);
        }
        let (lo, hi) = (math::ln(1e-3 * anchor), math::ln(10.0 * anchor));
        Ok((0..points).map(|i| math::exp(lo + (hi - lo) * i as f64 / (points - 1) as f64)).collect())
    }

    /// Mean held-out squared residual per sample for each radius of `grid`.
    pub fn cv_curve(&self, values: &[f64], grid: &[f64], cfg: &CsConfig) -> Result<Vec<f64>> {
        self.check(values)?;
        if self.folds.is_empty() {
            return Err(Error::invalid("problem was built without cross-validation folds"));
        }
        let b_full = self.design.tmatvec(values);
        let mut mse = vec![0.0; grid.len()];
        for fold in &self.folds {
            let mut b = b_full.clone();
            let mut d_test = 0.0;
            for &r in &fold.test_rows {
                axpy(-values[r], self.design.row(r), &mut b);
                d_test += values[r] * values[r];
            }
            let d_train = dot(values, values) - d_test;
            let mut warm: Option<Vec<f64>> = None;
            for (g, &tau) in grid.iter().enumerate() {
                let sol =
                    solve_l1_ls(&fold.train_gram, &b, d_train, tau, cfg.solver_tol, cfg.max_iter, warm.as_deref());
                let err: f64 = fold
                    .test_rows
                    .iter()
                    .map(|&r| {
                        let e = dot(self.design.row(r), &sol.coeffs) - values[r];
                        e * e
                    })
                    .sum();
                mse[g] += err / self.n_samples() as f64;
                warm = Some(sol.coeffs);
            }
        }
        Ok(mse)
    }

    /// Radius with the smallest held-out residual; ties go to the larger radius.
    pub fn cross_validate(&self, values: &[f64], cfg: &CsConfig) -> Result<f64> {
        let grid = self.tau_grid(values, cfg.cv_grid)?;
        if grid.len() == 1 {
            return Ok(grid[0]);
        }
        let curve = self.cv_curve(values, &grid, cfg)?;
        Ok(grid[best_index(&curve)])
    }
}

pub(crate) fn best_index(curve: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in curve.iter().enumerate().skip(1) {
        let b = curve[best];
        if v < b - 1e-12 * b.abs() || (v - b).abs() <= 1e-12 * b.abs() {
            best = i;
        }
    }
    best
}

/// One-shot CS fit from sample points (`np` values apiece) and responses.
pub fn cs_fit(points: &[f64], values: &[f64], basis: &PcBasis, cfg: &CsConfig) -> Result<PcExpansion> {
    cfg.validate()?;
    let folds = if cfg.tau == Tau::Auto { cfg.cv_folds } else { 0 };
    CsProblem::new(basis, points, folds, cfg.seed)?.fit(values, cfg)
}

pub fn cross_validate_tau(points: &[f64], values: &[f64], basis: &PcBasis, cfg: &CsConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.cv_folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    CsProblem::new(basis, points, cfg.cv_folds, cfg.seed)?.cross_validate(values, cfg)
}
