//! Non-intrusive spectral projection with a fixed quadrature rule.

use alloc::vec::Vec;

use super::{PcBasis, PcExpansion, PceTrajectory};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::quadrature::ParamRule;

/// Projection matrix `Pi_lj = nu_j Psi_l(xi^(j)) / ||Psi_l||^2`.
#[derive(Debug, Clone)]
pub struct NispProjector {
    basis: PcBasis,
    pi: Matrix,
    gram_defect: f64,
}

impl NispProjector {
    pub fn new(rule: &ParamRule, basis: &PcBasis) -> Result<Self> {
        if rule.dim() != basis.np() {
            return Err(Error::mismatch("rule and basis dimensions differ"));
        }
        let lambda = basis.design_matrix(rule.points());
        let w = rule.weights();
        let p = basis.len();
        let pi = Matrix::from_fn(p, rule.len(), |l, j| w[j] * lambda[(j, l)] / basis.norm_sq(l));

        // Discrete Gram matrix against the exact one; nonzero when the rule
        // is not exact to degree 2 N_ord.
        let mut gram_defect = 0.0f64;
        for l in 0..p {
            for k in l..p {
                let ip: f64 = (0..rule.len()).map(|j| w[j] * lambda[(j, l)] * lambda[(j, k)]).sum();
                let want = if l == k { basis.norm_sq(l) } else { 0.0 };
                gram_defect = gram_defect.max(math::abs(ip - want));
            }
        }
        Ok(Self { basis: basis.clone(), pi, gram_defect })
    }

    pub fn basis(&self) -> &PcBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &Matrix {
        &self.pi
    }

    /// Largest deviation of the discrete inner products from `delta_kl ||Psi_k||^2`.
    pub fn gram_defect(&self) -> f64 {
        self.gram_defect
    }

    /// True when the rule integrates every `Psi_k Psi_l` to within `tol`.
    pub fn is_exact(&self, tol: f64) -> bool {
        self.gram_defect <= tol
    }

    pub fn project(&self, values: &[f64]) -> Result<PcExpansion> {
        if values.len() != self.pi.cols() {
            return Err(Error::mismatch("one value per rule node expected"));
        }
        PcExpansion::new(self.basis.clone(), self.pi.matvec(values))
    }

    /// Project every time node; `values` is `N_quad x N_nodes`.
    pub fn project_trajectory(&self, values: &Matrix) -> Result<PceTrajectory> {
        if values.cols() != self.pi.cols() {
            return Err(Error::mismatch("one value per rule node expected"));
        }
        let p = self.basis.len();
        let mut coeffs = Matrix::zeros(values.rows(), p);
        for m in 0..values.rows() {
            let c: Vec<f64> = self.pi.matvec(values.row(m));
            coeffs.row_mut(m).copy_from_slice(&c);
        }
        PceTrajectory::new(self.basis.clone(), coeffs)
    }
}

/// `c_l = sum_j nu_j u(xi^(j)) Psi_l(xi^(j)) / ||Psi_l||^2`.
pub fn nisp_project(values: &[f64], rule: &ParamRule, basis: &PcBasis) -> Result<PcExpansion> {
    NispProjector::new(rule, basis)?.project(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pce::total_degree_basis;
    use crate::quadrature::{gauss_legendre, smolyak_rule, tensor_rule};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn setup() -> (PcBasis, ParamRule) {
        let b = total_degree_basis(3, 4).unwrap();
        let rule = tensor_rule(&gauss_legendre(5).unwrap(), 3).unwrap();
        (b, rule)
    }

    #[test]
    fn single_basis_function_projects_to_unit_vector() {
        let (b, rule) = setup();
        let values: Vec<f64> = (0..rule.len()).map(|j| super::super::psi_eval(b.alpha(5), rule.node(j))).collect();
        let e = nisp_project(&values, &rule, &b).unwrap();
        for (k, c) in e.coeffs().iter().enumerate() {
            let want = if k == 5 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_projects_to_mean() {
        let (b, rule) = setup();
        let e = nisp_project(&vec![3.0; rule.len()], &rule, &b).unwrap();
        assert!((e.coeffs()[0] - 3.0).abs() < 1e-13);
        assert!(e.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
    }

    #[test]
    fn random_polynomial_round_trip() {
        let (b, rule) = setup();
        let proj = NispProjector::new(&rule, &b).unwrap();
        assert!(proj.is_exact(1e-12));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let c: Vec<f64> = (0..b.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // Synthesize by direct multivariate evaluation, independent of eval_all.
            let values: Vec<f64> = (0..rule.len())
                .map(|j| (0..b.len()).map(|k| c[k] * super::super::psi_eval(b.alpha(k), rule.node(j))).sum())
                .collect();
            let e = proj.project(&values).unwrap();
            for (got, want) in e.coeffs().iter().zip(&c) {
                assert!((got - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn underresolved_rule_is_flagged() {
        let b = total_degree_basis(3, 4).unwrap();
        let coarse = tensor_rule(&gauss_legendre(2).unwrap(), 3).unwrap();
        assert!(!NispProjector::new(&coarse, &b).unwrap().is_exact(1e-8));
        let sparse = smolyak_rule(3, 3).unwrap();
        let b2 = total_degree_basis(3, 2).unwrap();
        assert!(NispProjector::new(&sparse, &b2).unwrap().is_exact(1e-10));
    }

    #[test]
    fn dimension_mismatch() {
        let (b, rule) = setup();
        assert!(nisp_project(&[1.0, 2.0], &rule, &b).is_err());
        let b2 = total_degree_basis(2, 2).unwrap();
        assert!(NispProjector::new(&rule, &b2).is_err());
    }
}
