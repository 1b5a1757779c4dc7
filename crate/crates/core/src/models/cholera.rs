use alloc::string::String;
use alloc::vec::Vec;

use super::ode::{integrate_ode, OdeConfig};
use super::Process;
use crate::error::{Error, Result};
use crate::math;

pub const CHOLERA_POPULATION: f64 = 10_000.0;

pub const CHOLERA_PARAM_NAMES: [&str; 8] = ["beta_L", "beta_H", "kappa_L", "b", "chi", "zeta", "delta", "gamma"];

/// Rates are per week; carrying capacities in bacteria per ml.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeraParams {
    pub beta_l: f64,
    pub beta_h: f64,
    pub kappa_l: f64,
    pub kappa_h: f64,
    pub b: f64,
    pub chi: f64,
    pub zeta: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl CholeraParams {
    pub fn nominal() -> Self {
        Self {
            beta_l: 1.5,
            beta_h: 7.5,
            kappa_l: 1e6,
            kappa_h: 1e6 / 700.0,
            b: 1.0 / 1560.0,
            chi: 168.0 / 5.0,
            zeta: 70.0,
            delta: 7.0 / 30.0,
            gamma: 7.0 / 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeraState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub b_h: f64,
    pub b_l: f64,
}

impl CholeraState {
    pub fn initial() -> Self {
        Self { s: CHOLERA_POPULATION - 1.0, i: 1.0, r: 0.0, b_h: 0.0, b_l: 0.0 }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.s, self.i, self.r, self.b_h, self.b_l]
    }
}

/// 10% uniform perturbation of the eight free parameters; `kappa_H = kappa_L / 700`.
pub fn cholera_param_map(xi: &[f64]) -> Result<CholeraParams> {
    if xi.len() != 8 {
        return Err(Error::mismatch("cholera model takes eight parameters"));
    }
    if xi.iter().any(|x| !(math::abs(*x) <= 1.0)) {
        return Err(Error::invalid("cholera parameters must lie in [-1, 1]"));
    }
    let nom = CholeraParams::nominal();
    let p = |bar: f64, x: f64| bar + 0.1 * bar * x;
    let kappa_l = p(nom.kappa_l, xi[2]);
    Ok(CholeraParams {
        beta_l: p(nom.beta_l, xi[0]),
        beta_h: p(nom.beta_h, xi[1]),
        kappa_l,
        kappa_h: kappa_l / 700.0,
        b: p(nom.b, xi[3]),
        chi: p(nom.chi, xi[4]),
        zeta: p(nom.zeta, xi[5]),
        delta: p(nom.delta, xi[6]),
        gamma: p(nom.gamma, xi[7]),
    })
}

/// Right-hand side for the state `(S, I, R, B_H, B_L)`.
#[inline]
pub fn cholera_rhs(p: &CholeraParams, y: &[f64], dy: &mut [f64]) {
    let (s, i, r, bh, bl) = (y[0], y[1], y[2], y[3], y[4]);
    let infection = p.beta_l * s * bl / (p.kappa_l + bl) + p.beta_h * s * bh / (p.kappa_h + bh);
    dy[0] = p.b * CHOLERA_POPULATION - infection - p.b * s;
    dy[1] = infection - (p.gamma + p.b) * i;
    dy[2] = p.gamma * i - p.b * r;
    dy[3] = p.zeta * i - p.chi * bh;
    dy[4] = p.chi * bh - p.delta * bl;
}

/// Full state trajectory on `times`, one row per node with columns `(S, I, R, B_H, B_L)`.
pub fn cholera_trajectory(p: &CholeraParams, times: &[f64], cfg: &OdeConfig) -> Result<crate::linalg::Matrix> {
    if times.first().copied() != Some(0.0) {
        return Err(Error::invalid("cholera output grid must start at t = 0"));
    }
    integrate_ode(|_, y, dy| cholera_rhs(p, y, dy), &CholeraState::initial().to_array(), times, cfg)
}

/// Infected population `I(t_m, xi)`.
pub fn cholera_infected(xi: &[f64], times: &[f64], cfg: &OdeConfig) -> Result<Vec<f64>> {
    let p = cholera_param_map(xi)?;
    let traj = cholera_trajectory(&p, times, cfg)?;
    Ok((0..times.len()).map(|m| traj[(m, 1)]).collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CholeraModel {
    pub ode: OdeConfig,
}

impl Process for CholeraModel {
    fn n_params(&self) -> usize {
        8
    }

    fn param_names(&self) -> Vec<String> {
        CHOLERA_PARAM_NAMES.iter().map(|s| String::from(*s)).collect()
    }

    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> Result<()> {
        let p = cholera_param_map(xi)?;
        let traj = cholera_trajectory(&p, times, &self.ode)?;
        for (m, o) in out.iter_mut().enumerate() {
            *o = traj[(m, 1)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dt: f64, horizon: f64) -> Vec<f64> {
        let n = (horizon / dt).round() as usize;
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn nominal_parameters() {
        let p = cholera_param_map(&[0.0; 8]).unwrap();
        assert_eq!(p, CholeraParams::nominal());
        assert_eq!(p.kappa_h, 1e6 / 700.0);
        assert_eq!(p.b, 1.0 / 1560.0);
    }

    #[test]
    fn perturbed_parameters() {
        let mut xi = [0.0; 8];
        xi[0] = 1.0;
        let p = cholera_param_map(&xi).unwrap();
        assert!((p.beta_l - 1.65).abs() < 1e-14);
        assert_eq!(p.beta_h, 7.5);
        let mut xi = [0.0; 8];
        xi[2] = -1.0;
        let p = cholera_param_map(&xi).unwrap();
        assert!((p.kappa_l - 9e5).abs() < 1e-8);
        assert!((p.kappa_h - 9e5 / 700.0).abs() < 1e-10);
        xi[4] = 1.01;
        assert!(cholera_param_map(&xi).is_err());
    }

    #[test]
    fn population_is_conserved() {
        let times = grid(0.25, 250.0);
        let cfg = OdeConfig::default();
        let traj = cholera_trajectory(&CholeraParams::nominal(), &times, &cfg).unwrap();
        assert_eq!(traj[(0, 1)], 1.0);
        for m in 0..times.len() {
            let total = traj[(m, 0)] + traj[(m, 1)] + traj[(m, 2)];
            assert!((total - CHOLERA_POPULATION).abs() <= 1e-3, "t={} total={total}", times[m]);
        }
    }

    #[test]
    fn epidemic_peak_then_decay() {
        let times = grid(0.05, 50.0);
        let i = cholera_infected(&[0.0; 8], &times, &OdeConfig::default()).unwrap();
        let (peak, &imax) = i.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
        assert!(peak > 0 && peak < times.len() - 1);
        assert!(imax > 100.0);
        // Rise before and fall after the peak, allowing for small oscillations far away.
        assert!(i[..peak].windows(2).filter(|w| w[1] < w[0]).count() == 0);
        assert!(*i.last().unwrap() < 0.1 * imax);
    }

    #[test]
    fn tolerance_halving_self_convergence() {
        let times = grid(0.25, 250.0);
        let coarse = OdeConfig::default();
        let fine = OdeConfig { abs_tol: 0.5e-6, rel_tol: 0.5e-6, ..coarse };
        let xi = [0.3, -0.2, 0.5, 0.1, -0.7, 0.9, 0.0, -0.4];
        let a = cholera_infected(&xi, &times, &coarse).unwrap();
        let b = cholera_infected(&xi, &times, &fine).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-3 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
