//! Multivariate Legendre polynomial chaos on `[-1, 1]^Np`.
//!
//! Norms follow the normalized uniform measure, `||Psi_k||^2 = prod_i 1/(2 alpha_i + 1)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::binomial;
use crate::sobol::Subset;

mod cs;
mod nisp;

pub use cs::{cross_validate_tau, cs_fit, solve_l1_ls, CsConfig, CsProblem, L1Solution, Tau};
pub use nisp::{nisp_project, NispProjector};

/// Default cap on the number of basis terms.
pub const DEFAULT_BASIS_CAP: usize = 1_000_000;

/// Legendre polynomial `P_order(x)` by the three-term recurrence.
pub fn legendre_eval(order: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if order == 0 {
        return p0;
    }
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `Psi_alpha(xi) = prod_i P_{alpha_i}(xi_i)`.
pub fn psi_eval(alpha: &[u32], xi: &[f64]) -> f64 {
    alpha.iter().zip(xi).map(|(&a, &x)| legendre_eval(a as usize, x)).product()
}

/// Total-degree Legendre basis in graded lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PcBasis {
    np: usize,
    order: usize,
    alphas: Vec<u32>,
    norms: Vec<f64>,
    supports: Vec<u64>,
}

/// All multi-indices with total degree at most `order`; the zero index comes first.
pub fn total_degree_basis(np: usize, order: usize) -> Result<PcBasis> {
    total_degree_basis_capped(np, order, DEFAULT_BASIS_CAP)
}

pub fn total_degree_basis_capped(np: usize, order: usize, cap: usize) -> Result<PcBasis> {
    if np == 0 || np > 64 {
        return Err(Error::invalid("basis dimension must be between 1 and 64"));
    }
    let count = basis_size(np, order);
    if count > cap as u128 {
        return Err(Error::CapExceeded { what: "polynomial chaos basis", requested: count, cap });
    }
    let mut alphas = Vec::with_capacity(count as usize * np);
    let mut current = vec![0u32; np];
    for degree in 0..=order {
        push_degree(&mut alphas, &mut current, 0, degree as u32);
    }
    let n = alphas.len() / np;
    let mut norms = Vec::with_capacity(n);
    let mut supports = Vec::with_capacity(n);
    for k in 0..n {
        let a = &alphas[k * np..(k + 1) * np];
        norms.push(a.iter().map(|&ai| 1.0 / (2.0 * ai as f64 + 1.0)).product());
        supports.push(a.iter().enumerate().filter(|(_, &ai)| ai > 0).fold(0u64, |m, (i, _)| m | (1u64 << i)));
    }
    Ok(PcBasis { np, order, alphas, norms, supports })
}

/// `(order + np)! / (order! np!)`.
pub fn basis_size(np: usize, order: usize) -> u128 {
    binomial(order + np, np)
}

fn push_degree(out: &mut Vec<u32>, current: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.extend_from_slice(current);
        current[pos] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a;
        push_degree(out, current, pos + 1, remaining - a);
    }
    current[pos] = 0;
}

impl PcBasis {
    pub fn np(&self) -> usize {
        self.np
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn alpha(&self, k: usize) -> &[u32] {
        &self.alphas[k * self.np..(k + 1) * self.np]
    }

    /// `||Psi_k||^2`.
    pub fn norm_sq(&self, k: usize) -> f64 {
        self.norms[k]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Bit mask of the variables term `k` depends on.
    pub fn support(&self, k: usize) -> u64 {
        self.supports[k]
    }

    /// Evaluate every basis function at `xi`.
    pub fn eval_all(&self, xi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(xi.len(), self.np);
        let p = self.order + 1;
        let mut table = vec![0.0; self.np * p];
        for (i, &x) in xi.iter().enumerate() {
            let row = &mut table[i * p..(i + 1) * p];
            row[0] = 1.0;
            if p > 1 {
                row[1] = x;
            }
            for k in 2..p {
                let kf = k as f64;
                row[k] = ((2.0 * kf - 1.0) * x * row[k - 1] - (kf - 1.0) * row[k - 2]) / kf;
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            let a = self.alpha(k);
            let mut v = 1.0;
            for (i, &ai) in a.iter().enumerate() {
                if ai > 0 {
                    v *= table[i * p + ai as usize];
                }
            }
            *o = v;
        }
    }

    /// `Lambda_jk = Psi_k(xi^(j))` for points stored `np` values apiece.
    pub fn design_matrix(&self, points: &[f64]) -> Matrix {
        let n = points.len() / self.np;
        let mut m = Matrix::zeros(n, self.len());
        for j in 0..n {
            let xi = &points[j * self.np..(j + 1) * self.np];
            self.eval_all(xi, m.row_mut(j));
        }
        m
    }

    /// `K_i`: nonconstant terms that involve variable `i` (0-based).
    pub fn index_set_k(&self, i: usize) -> Vec<usize> {
        (1..self.len()).filter(|&k| self.supports[k] & (1u64 << i) != 0).collect()
    }

    /// `I_i`: nonconstant terms that involve only variable `i` (0-based).
    pub fn index_set_i(&self, i: usize) -> Vec<usize> {
        (1..self.len()).filter(|&k| self.supports[k] == 1u64 << i).collect()
    }
}

/// `u(xi) ~ sum_k c_k Psi_k(xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcExpansion {
    basis: PcBasis,
    coeffs: Vec<f64>,
}

/// Variance split of one expansion with respect to a subset `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSplit {
    /// Terms whose support is a nonempty subset of `U`.
    pub first: f64,
    /// Terms whose support intersects `U`.
    pub total: f64,
    pub variance: f64,
}

impl PcExpansion {
    pub fn new(basis: PcBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::mismatch("coefficient count differs from basis size"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("expansion coefficients must be finite"));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &PcBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let mut psi = vec![0.0; self.basis.len()];
        self.basis.eval_all(xi, &mut psi);
        crate::linalg::dot(&psi, &self.coeffs)
    }

    /// `sum_{k >= 1} c_k^2 ||Psi_k||^2`.
    pub fn variance(&self) -> f64 {
        variance_of(&self.basis, &self.coeffs)
    }

    /// Partial variances for `U` without the zero-variance check.
    pub fn split(&self, u: &Subset) -> VarianceSplit {
        split_of(&self.basis, &self.coeffs, u)
    }
}

pub(crate) fn variance_of(basis: &PcBasis, coeffs: &[f64]) -> f64 {
    coeffs.iter().zip(basis.norms()).skip(1).map(|(c, n)| c * c * n).sum()
}

pub(crate) fn split_of(basis: &PcBasis, coeffs: &[f64], u: &Subset) -> VarianceSplit {
    let mask = u.mask();
    let mut split = VarianceSplit { first: 0.0, total: 0.0, variance: 0.0 };
    for k in 1..basis.len() {
        let v = coeffs[k] * coeffs[k] * basis.norm_sq(k);
        let s = basis.support(k);
        split.variance += v;
        if s & mask != 0 {
            split.total += v;
            if s & !mask == 0 {
                split.first += v;
            }
        }
    }
    split
}

/// First-order and total variance of `U` together with the total variance.
/// Fails when the expansion has zero variance.
pub fn pce_variance_split(expansion: &PcExpansion, u: &Subset) -> Result<VarianceSplit> {
    if u.np() != expansion.basis().np() {
        return Err(Error::mismatch("subset and basis dimensions differ"));
    }
    let split = expansion.split(u);
    if !(split.variance > 0.0) {
        return Err(Error::degenerate("expansion has zero variance"));
    }
    Ok(split)
}

/// One expansion per time node sharing a basis (`coeffs` is `N_quad x N_PC+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PceTrajectory {
    basis: PcBasis,
    coeffs: Matrix,
}

impl PceTrajectory {
    pub fn new(basis: PcBasis, coeffs: Matrix) -> Result<Self> {
        if coeffs.cols() != basis.len() {
            return Err(Error::mismatch("coefficient rows differ from basis size"));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &PcBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn n_times(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn at(&self, m: usize) -> PcExpansion {
        PcExpansion { basis: self.basis.clone(), coeffs: self.coeffs.row(m).to_vec() }
    }

    pub fn variance_at(&self, m: usize) -> f64 {
        variance_of(&self.basis, self.coeffs.row(m))
    }

    pub fn split_at(&self, m: usize, u: &Subset) -> VarianceSplit {
        split_of(&self.basis, self.coeffs.row(m), u)
    }

    pub fn eval(&self, m: usize, xi: &[f64]) -> f64 {
        let mut psi = vec![0.0; self.basis.len()];
        self.basis.eval_all(xi, &mut psi);
        crate::linalg::dot(&psi, self.coeffs.row(m))
    }

    /// Covariance implied by the surrogate,
    /// `c(t_l, t_m) = sum_{k >= 1} ||Psi_k||^2 c_k(t_l) c_k(t_m)`.
    pub fn synthesized_covariance(&self) -> Matrix {
        let n = self.n_times();
        let p = self.basis.len();
        let scaled = Matrix::from_fn(n, p, |m, k| {
            if k == 0 {
                0.0
            } else {
                self.coeffs[(m, k)] * crate::math::sqrt(self.basis.norm_sq(k))
            }
        });
        scaled.transpose().gram()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre, tensor_rule};

    #[test]
    fn basis_counts() {
        assert_eq!(total_degree_basis(3, 4).unwrap().len(), 35);
        assert_eq!(total_degree_basis(8, 3).unwrap().len(), 165);
        assert_eq!(total_degree_basis(5, 0).unwrap().len(), 1);
        for np in 1..=10 {
            for order in 0..=6 {
                let b = total_degree_basis(np, order).unwrap();
                let fact = |n: u128| (1..=n).product::<u128>();
                let want = fact((order + np) as u128) / (fact(order as u128) * fact(np as u128));
                assert_eq!(b.len() as u128, want);
            }
        }
        assert!(matches!(total_degree_basis_capped(10, 10, 100), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn basis_is_graded_with_zero_first() {
        let b = total_degree_basis(3, 3).unwrap();
        assert!(b.alpha(0).iter().all(|&a| a == 0));
        let degrees: Vec<u32> = (0..b.len()).map(|k| b.alpha(k).iter().sum()).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(b.alpha(1), &[1, 0, 0]);
        assert_eq!(b.alpha(2), &[0, 1, 0]);
        assert_eq!(b.alpha(3), &[0, 0, 1]);
        assert_eq!(b.alpha(4), &[2, 0, 0]);
        for k in 0..b.len() {
            let want: f64 = b.alpha(k).iter().map(|&a| 1.0 / (2.0 * a as f64 + 1.0)).product();
            assert_eq!(b.norm_sq(k), want);
        }
    }

    #[test]
    fn legendre_values() {
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(legendre_eval(0, x), 1.0);
            assert_eq!(legendre_eval(1, x), x);
        }
        assert!((legendre_eval(2, 0.5) + 0.125).abs() < 1e-15);
        assert!((legendre_eval(3, 0.5) + 0.4375).abs() < 1e-15);
    }

    #[test]
    fn quadrature_orthogonality() {
        let b = total_degree_basis(3, 4).unwrap();
        let rule = tensor_rule(&gauss_legendre(5).unwrap(), 3).unwrap();
        let lambda = b.design_matrix(rule.points());
        for k in 0..b.len() {
            for l in 0..b.len() {
                let ip: f64 = (0..rule.len()).map(|j| rule.weights()[j] * lambda[(j, k)] * lambda[(j, l)]).sum();
                let want = if k == l { b.norm_sq(k) } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "<{k},{l}> = {ip}");
            }
        }
    }

    #[test]
    fn index_sets() {
        let b = total_degree_basis(2, 1).unwrap();
        assert_eq!(b.index_set_k(0), vec![1]);
        assert_eq!(b.index_set_k(1), vec![2]);
        let b = total_degree_basis(4, 3).unwrap();
        let mut union = Vec::new();
        for i in 0..4 {
            let ki = b.index_set_k(i);
            let ii = b.index_set_i(i);
            assert!(ii.iter().all(|k| ki.contains(k)));
            union.extend(ki);
        }
        union.sort();
        union.dedup();
        assert_eq!(union, (1..b.len()).collect::<Vec<_>>());
    }

    fn expansion_from(b: &PcBasis, terms: &[(&[u32], f64)]) -> PcExpansion {
        let mut c = vec![0.0; b.len()];
        for (alpha, v) in terms {
            let k = (0..b.len()).find(|&k| b.alpha(k) == *alpha).unwrap();
            c[k] = *v;
        }
        PcExpansion::new(b.clone(), c).unwrap()
    }

    #[test]
    fn variance_split_examples() {
        let b = total_degree_basis(2, 2).unwrap();
        let u1 = Subset::singleton(2, 0);
        let u2 = Subset::singleton(2, 1);

        let e = expansion_from(&b, &[(&[1, 0], 1.0)]);
        let s = pce_variance_split(&e, &u1).unwrap();
        assert_eq!(s.first / s.variance, 1.0);
        assert_eq!(s.total / s.variance, 1.0);

        let e = expansion_from(&b, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let s1 = pce_variance_split(&e, &u1).unwrap();
        let s2 = pce_variance_split(&e, &u2).unwrap();
        assert_eq!(s1.first / s1.variance, 0.5);
        assert_eq!(s2.first / s2.variance, 0.5);

        // xi_1 xi_2 = P1(xi_1) P1(xi_2): a pure interaction.
        let e = expansion_from(&b, &[(&[1, 1], 1.0)]);
        for u in [&u1, &u2] {
            let s = pce_variance_split(&e, u).unwrap();
            assert_eq!(s.first, 0.0);
            assert_eq!(s.total / s.variance, 1.0);
        }

        let flat = expansion_from(&b, &[(&[0, 0], 2.0)]);
        assert!(matches!(pce_variance_split(&flat, &u1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pure_interaction_matches_pick_freeze_oracle() {
        // Independent check of the ANOVA split of xi1*xi2 with a brute-force
        // pick-freeze estimate.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let f = |x: &[f64]| x[0] * x[1];
        let (mut first, mut total, mut s, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bb: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ab = [bb[0], a[1]];
            let (fa, fb, fab) = (f(&a), f(&bb), f(&ab));
            first += fb * (fab - fa);
            total += 0.5 * (fa - fab) * (fa - fab);
            s += fa;
            s2 += fa * fa;
        }
        let var = s2 / n as f64 - (s / n as f64).powi(2);
        assert!((first / n as f64 / var).abs() < 0.03);
        assert!((total / n as f64 / var - 1.0).abs() < 0.03);
    }

    #[test]
    fn synthesized_covariance_diagonal_is_pointwise_variance() {
        let b = total_degree_basis(2, 2).unwrap();
        let coeffs = Matrix::from_fn(4, b.len(), |m, k| (m as f64 + 1.0) * (k as f64 - 2.5));
        let traj = PceTrajectory::new(b, coeffs).unwrap();
        let k = traj.synthesized_covariance();
        for m in 0..4 {
            assert!((k[(m, m)] - traj.variance_at(m)).abs() < 1e-12);
        }
    }
}
