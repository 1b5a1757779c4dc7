//! Dormand-Prince 5(4) with PI step-size control and the 4th-order continuous
//! extension for output on a prescribed grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// Zero selects an automatic initial step.
    pub initial_step: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-6, rel_tol: 1e-6, max_steps: 1_000_000, initial_step: 0.0 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrate `y' = rhs(t, y)` from `out_grid[0]` with `y(out_grid[0]) = y0` and
/// return the state at every node of `out_grid` (one row per node).
pub fn integrate_ode<F>(mut rhs: F, y0: &[f64], out_grid: &[f64], cfg: &OdeConfig) -> Result<Matrix>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(cfg.abs_tol > 0.0 && cfg.rel_tol > 0.0) {
        return Err(Error::invalid("ODE tolerances must be positive"));
    }
    if out_grid.is_empty() {
        return Err(Error::invalid("empty output grid"));
    }
    if out_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("output grid must be strictly increasing"));
    }
    let n = y0.len();
    let mut out = Matrix::zeros(out_grid.len(), n);
    out.row_mut(0).copy_from_slice(y0);
    if out_grid.len() == 1 {
        return Ok(out);
    }

    let t_end = *out_grid.last().unwrap();
    let mut t = out_grid[0];
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut cont: [Vec<f64>; 5] = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    rhs(t, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration { t, reason: "right-hand side is not finite at the initial state" });
    }

    let mut h =
        if cfg.initial_step > 0.0 { cfg.initial_step } else { initial_step(&mut rhs, t, &y, &k1, t_end - t, cfg) };
    h = h.min(t_end - t);

    let mut next_out = 1;
    let mut fac_old = 1e-4;
    let mut steps = 0usize;
    let mut rejected_last = false;

    while next_out < out_grid.len() {
        if steps >= cfg.max_steps {
            return Err(Error::Integration { t, reason: "maximum number of steps exceeded" });
        }
        if h < 1e-14 * math::abs(t).max(1.0) {
            return Err(Error::Integration { t, reason: "step size underflow" });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &stage, &mut k5);
        for i in 0..n {
            stage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &stage, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &ynew, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = cfg.abs_tol + cfg.rel_tol * math::abs(y[i]).max(math::abs(ynew[i]));
            err += (e / sk) * (e / sk);
        }
        let err = math::sqrt(err / n.max(1) as f64);
        if !err.is_finite() {
            h *= FAC_MIN;
            rejected_last = true;
            continue;
        }

        let expo = 0.2 - BETA * 0.75;
        let fac11 = math::powf(err, expo);
        if err <= 1.0 {
            let fac = fac11 / math::powf(fac_old, BETA);
            let fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = err.max(1e-4);

            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_new = if last { t_end } else { t + h };
            while next_out < out_grid.len() && out_grid[next_out] <= t_new {
                let theta = (out_grid[next_out] - t) / h;
                let theta1 = 1.0 - theta;
                let row = out.row_mut(next_out);
                for i in 0..n {
                    row[i] = cont[0][i]
                        + theta * (cont[1][i] + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
                }
                next_out += 1;
            }
            if last {
                out.row_mut(out_grid.len() - 1).copy_from_slice(&ynew);
            }

            core::mem::swap(&mut y, &mut ynew);
            core::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration { t, reason: "solution is no longer finite" });
            }
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            h = h_new.min(t_end - t);
            if t >= t_end {
                break;
            }
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
    }
    Ok(out)
}

fn initial_step<F>(rhs: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, cfg: &OdeConfig) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let scale: Vec<f64> = y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * math::abs(*v)).collect();
    let norm = |v: &[f64]| -> f64 { math::sqrt(v.iter().zip(&scale).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n) };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { math::powf(0.01 / d1.max(d2), 0.2) };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let cfg = OdeConfig { abs_tol: 1e-8, rel_tol: 1e-8, ..OdeConfig::default() };
        let out = integrate_ode(|_, y, dy| dy[0] = -y[0], &[1.0], &[0.0, 0.5, 1.0], &cfg).unwrap();
        assert!((out[(2, 0)] - (-1.0f64).exp()).abs() < 1e-7);
        assert!((out[(1, 0)] - (-0.5f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_field_is_constant() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let out =
            integrate_ode(|_, _, dy| dy.iter_mut().for_each(|d| *d = 0.0), &[3.0, -2.0], &grid, &OdeConfig::default())
                .unwrap();
        for m in 0..grid.len() {
            assert_eq!(out.row(m), &[3.0, -2.0]);
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let cfg = OdeConfig { abs_tol: 1e-9, rel_tol: 1e-9, ..OdeConfig::default() };
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let out = integrate_ode(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            &grid,
            &cfg,
        )
        .unwrap();
        for (m, &t) in grid.iter().enumerate() {
            assert!((out[(m, 0)] - t.cos()).abs() < 100.0 * cfg.rel_tol, "t={t}");
            assert!((out[(m, 1)] + t.sin()).abs() < 100.0 * cfg.rel_tol, "t={t}");
        }
    }

    #[test]
    fn blow_up_reports_failure_time() {
        let cfg = OdeConfig { max_steps: 10_000, ..OdeConfig::default() };
        let err = integrate_ode(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], &[0.0, 2.0], &cfg).unwrap_err();
        match err {
            Error::Integration { t, .. } => assert!(t > 0.9 && t < 1.01, "t={t}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn step_cap_is_enforced() {
        let cfg = OdeConfig { max_steps: 3, ..OdeConfig::default() };
        let err = integrate_ode(|t, _, dy| dy[0] = (50.0 * t).cos(), &[0.0], &[0.0, 100.0], &cfg);
        assert!(matches!(err, Err(Error::Integration { .. })));
    }
}
