use gensobol_core::ensemble::{CovEstimator, CovMatrix};
use gensobol_core::kl::{nystrom_eig, EigenMethod};
use gensobol_core::linalg::Matrix;
use gensobol_core::pce::{basis_size, psi_eval, total_degree_basis, PcExpansion, PceTrajectory};
use gensobol_core::quadrature::{gauss_legendre, tensor_rule, TimeRule};
use gensobol_core::sobol::{
    generalized_from_pce, generalized_spectral, growing_window, percentile, singletons, spectral_with_denominator,
    window_taus, Subset, WindowSource,
};
use proptest::prelude::*;

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

/// Random per-node expansion on a small grid: `np` in 2..=4, order 1..=3, 6 nodes.
fn trajectory() -> impl Strategy<Value = (PceTrajectory, TimeRule)> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(np, order)| {
        let basis = total_degree_basis(np, order).unwrap();
        let p = basis.len();
        coeffs(6 * p).prop_map(move |c| {
            let traj = PceTrajectory::new(basis.clone(), Matrix::from_row_major(6, p, c).unwrap()).unwrap();
            (traj, TimeRule::uniform(1.0, 0.2).unwrap())
        })
    })
}

fn subset(np: usize) -> impl Strategy<Value = Subset> {
    prop::collection::vec(any::<bool>(), np).prop_filter_map("nonempty proper", move |bits| {
        let m: Vec<usize> = (0..np).filter(|&i| bits[i]).collect();
        (!m.is_empty() && m.len() < np).then(|| Subset::new(np, &m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_size_is_a_binomial(np in 1usize..10, order in 0usize..8) {
        let expect = binom((np + order) as u64, order as u64);
        prop_assert_eq!(basis_size(np, order), expect as u128);
        prop_assert_eq!(total_degree_basis(np, order).unwrap().len() as u64, expect);
    }

    #[test]
    fn parseval_matches_quadrature_variance(np in 1usize..=3, order in 1usize..=3, seed in coeffs(20)) {
        let basis = total_degree_basis(np, order).unwrap();
        let c: Vec<f64> = (0..basis.len()).map(|k| seed[k % seed.len()] / (1.0 + k as f64)).collect();
        let e = PcExpansion::new(basis, c).unwrap();
        // Gauss rule with order + 1 points integrates f^2 exactly.
        let rule = tensor_rule(&gauss_legendre(order + 1).unwrap(), np).unwrap();
        let mean = rule.integrate(|x| e.eval(x));
        let var = rule.integrate(|x| (e.eval(x) - mean).powi(2));
        prop_assert!((mean - e.mean()).abs() <= 1e-12 * (1.0 + mean.abs()));
        prop_assert!((var - e.variance()).abs() <= 1e-12 * (1.0 + var));
    }

    #[test]
    fn gauss_rule_is_exact_to_degree(n in 1usize..=12, deg_frac in 0.0f64..1.0) {
        let deg = ((2 * n - 1) as f64 * deg_frac) as i32;
        let rule = gauss_legendre(n).unwrap();
        // Uniform measure on [-1, 1]: E[x^d] = 1/(d+1) for even d, 0 for odd.
        let exact = if deg % 2 == 0 { 1.0 / (deg as f64 + 1.0) } else { 0.0 };
        prop_assert!((rule.integrate(|x| x.powi(deg)) - exact).abs() <= 1e-13);
    }

    #[test]
    fn legendre_products_are_orthonormal_under_gauss(a in 0u32..6, b in 0u32..6) {
        let rule = gauss_legendre(8).unwrap();
        let ip = rule.integrate(|x| psi_eval(&[a], &[x]) * psi_eval(&[b], &[x]));
        // Normalized so that E[psi_a^2] = 1 / (2a + 1).
        let expect = if a == b { 1.0 / (2.0 * a as f64 + 1.0) } else { 0.0 };
        prop_assert!((ip - expect).abs() <= 1e-12);
    }

    #[test]
    fn index_bounds_on_pce_path((traj, rule) in trajectory()) {
        let np = traj.basis().np();
        let r = generalized_from_pce(&traj, &rule, &singletons(np)).unwrap();
        let first_sum: f64 = r.iter().map(|e| e.first).sum();
        let total_sum: f64 = r.iter().map(|e| e.total).sum();
        prop_assert!(first_sum <= 1.0 + 1e-12);
        prop_assert!(total_sum >= 1.0 - 1e-12);
        for e in &r {
            prop_assert!(e.first >= -1e-15 && e.first <= e.total + 1e-15 && e.total <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn complement_identity_on_pce_path((traj, rule) in trajectory(), pick in any::<prop::sample::Index>()) {
        let np = traj.basis().np();
        let subsets: Vec<Subset> = (1..(1u64 << np) - 1)
            .map(|m| Subset::new(np, &(0..np).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>()).unwrap())
            .collect();
        let u = subsets[pick.index(subsets.len())];
        let r = generalized_from_pce(&traj, &rule, &[u, u.complement()]).unwrap();
        prop_assert!((r[0].total + r[1].first - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn complement_identity_on_spectral_path(
        modes in prop::collection::vec(coeffs(10), 1..5),
        u in subset(3),
    ) {
        let basis = total_degree_basis(3, 2).unwrap();
        let modes: Vec<PcExpansion> = modes.into_iter().map(|c| {
            let mut c = c;
            c[0] = 0.0;
            PcExpansion::new(basis.clone(), c).unwrap()
        }).collect();
        let lambdas: Vec<f64> = modes.iter().map(|m| m.variance()).collect();
        prop_assume!(lambdas.iter().sum::<f64>() > 1e-6);
        let r = generalized_spectral(&modes, &lambdas, &[u, u.complement()]).unwrap();
        prop_assert!((r[0].total + r[1].first - 1.0).abs() <= 1e-10);
        let s = spectral_with_denominator(&modes, lambdas.iter().sum(), &[Subset::full(3)]).unwrap();
        prop_assert!((s[0].first - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn trace_identity_for_synthesized_covariance((traj, rule) in trajectory()) {
        let cov = traj.synthesized_covariance();
        let n = cov.rows();
        let var: Vec<f64> = (0..n).map(|m| traj.variance_at(m)).collect();
        let integrated = rule.integrate(&var);
        prop_assume!(integrated > 1e-8);
        let s = nystrom_eig(&CovMatrix::new(cov, CovEstimator::Quadrature { n: 1 }).unwrap(), &rule, n, EigenMethod::Dense).unwrap();
        let sum: f64 = s.eigenvalues().iter().sum();
        prop_assert!((sum - integrated).abs() <= 1e-8 * integrated);
        // Eigenvectors are orthonormal in the weighted inner product.
        for i in 0..n {
            for j in 0..n {
                let ip: f64 = (0..n).map(|m| rule.weights()[m] * s.vector(i)[m] * s.vector(j)[m]).sum();
                if s.eigenvalues()[i] > 1e-10 * s.eigenvalues()[0] && s.eigenvalues()[j] > 1e-10 * s.eigenvalues()[0] {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((ip - delta).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn full_window_equals_full_horizon((traj, rule) in trajectory()) {
        let np = traj.basis().np();
        let targets = singletons(np);
        let full = generalized_from_pce(&traj, &rule, &targets).unwrap();
        prop_assume!(traj.variance_at(1) > 1e-10);
        let taus = window_taus(&rule, rule.nodes()[1], 1);
        let w = growing_window(WindowSource::Pce { traj: &traj, targets: &targets }, &rule, &taus).unwrap();
        let last = w.last().unwrap();
        prop_assert_eq!(last.tau, rule.horizon());
        for (a, b) in last.entries.iter().zip(&full) {
            prop_assert!((a.total - b.total).abs() <= 1e-14);
        }
    }

    #[test]
    fn complement_is_an_involution(np in 1usize..=16, bits in any::<u16>()) {
        let m: Vec<usize> = (0..np).filter(|&i| bits >> i & 1 == 1).collect();
        prop_assume!(!m.is_empty());
        let u = Subset::new(np, &m).unwrap();
        prop_assert_eq!(u.complement().complement(), u);
        prop_assert_eq!(u.len() + u.complement().len(), np);
    }

    #[test]
    fn percentile_is_monotone_and_bounded(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), p in 0.0f64..100.0, q in 0.0f64..100.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = (p.min(q), p.max(q));
        let (a, b) = (percentile(&v, lo), percentile(&v, hi));
        prop_assert!(a <= b);
        prop_assert!(v[0] <= a && b <= v[v.len() - 1]);
    }
}
