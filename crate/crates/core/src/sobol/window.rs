//! Generalized indices over growing windows `[0, tau]`.

use alloc::format;
use alloc::vec::Vec;

use super::{generalized_from_pce, IndexEstimate, PointwiseVariances, Subset};
use crate::error::{Error, Result};
use crate::pce::PceTrajectory;
use crate::quadrature::TimeRule;

/// Per-node data a window curve can be recomputed from.
#[derive(Debug, Clone, Copy)]
pub enum WindowSource<'a> {
    Pce { traj: &'a PceTrajectory, targets: &'a [Subset] },
    Pointwise(&'a PointwiseVariances),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowPoint {
    pub tau: f64,
    pub entries: Vec<IndexEstimate>,
}

/// Indices on `[0, tau]` for each `tau` (increasing grid nodes of `rule`).
///
/// At `tau = T` the result equals the full-horizon estimate of the same source.
pub fn growing_window(source: WindowSource<'_>, rule: &TimeRule, taus: &[f64]) -> Result<Vec<WindowPoint>> {
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("window horizons must be increasing"));
    }
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let sub = rule.restrict(tau)?;
        let entries = match source {
            WindowSource::Pce { traj, targets } => generalized_from_pce(traj, &sub, targets),
            WindowSource::Pointwise(pv) => pv.generalized(&sub),
        }
        .map_err(|e| match e {
            Error::Degenerate(_) => Error::degenerate(format!("no positive variance on [0, {tau}]")),
            other => other,
        })?;
        out.push(WindowPoint { tau, entries });
    }
    Ok(out)
}

/// Every grid node from the first with `t >= tau_min`.
pub fn window_taus(rule: &TimeRule, tau_min: f64, stride: usize) -> Vec<f64> {
    let nodes = rule.nodes();
    let mut taus: Vec<f64> = nodes.iter().copied().filter(|&t| t >= tau_min).step_by(stride.max(1)).collect();
    if taus.last() != nodes.last() {
        taus.push(rule.horizon());
    }
    taus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::pce::total_degree_basis;
    use crate::sobol::{generalized_from_pce, singletons};

    #[test]
    fn full_horizon_matches_report_and_constant_sensitivity_is_flat() {
        let rule = TimeRule::uniform(2.0, 0.1).unwrap();
        let b = total_degree_basis(2, 2).unwrap();
        let c = Matrix::from_fn(rule.len(), b.len(), |m, k| {
            let t = rule.nodes()[m];
            match k {
                1 => 2.0 * libm::cos(t),
                2 => libm::cos(t),
                _ => 0.0,
            }
        });
        let traj = PceTrajectory::new(b, c).unwrap();
        let targets = singletons(2);
        let full = generalized_from_pce(&traj, &rule, &targets).unwrap();
        let taus = window_taus(&rule, 0.1, 3);
        let pts = growing_window(WindowSource::Pce { traj: &traj, targets: &targets }, &rule, &taus).unwrap();
        assert_eq!(pts.last().unwrap().entries, full);
        for p in &pts {
            assert!((p.entries[0].total - 0.8).abs() < 1e-12);
        }
        assert!(growing_window(WindowSource::Pce { traj: &traj, targets: &targets }, &rule, &[0.55]).is_err());
        assert!(growing_window(WindowSource::Pce { traj: &traj, targets: &targets }, &rule, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn window_before_any_variance_is_degenerate() {
        let rule = TimeRule::uniform(1.0, 0.5).unwrap();
        let targets = singletons(1);
        let pv = PointwiseVariances::new(
            targets,
            alloc::vec![0.0, 0.0, 1.0],
            Matrix::from_row_major(1, 3, alloc::vec![0.0, 0.0, 1.0]).unwrap(),
            Matrix::from_row_major(1, 3, alloc::vec![0.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(growing_window(WindowSource::Pointwise(&pv), &rule, &[0.5]), Err(Error::Degenerate(_))));
        assert_eq!(growing_window(WindowSource::Pointwise(&pv), &rule, &[1.0]).unwrap()[0].entries[0].first, 1.0);
    }
}
