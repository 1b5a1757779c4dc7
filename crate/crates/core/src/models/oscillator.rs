use alloc::string::String;
use alloc::vec::Vec;

use super::Process;
use crate::error::{Error, Result};
use crate::math;

/// Damped oscillator `y'' + 2 alpha y' + (alpha^2 + beta^2) y = 0`, `y(0) = ell`, `y'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub alpha: f64,
    pub beta: f64,
    pub ell: f64,
}

/// Closed-form displacement `ell e^{-alpha t} (cos(beta t) + alpha/beta sin(beta t))`.
#[inline]
pub fn oscillator_eval(t: f64, p: &OscillatorParams) -> f64 {
    debug_assert!(p.beta != 0.0);
    let bt = p.beta * t;
    p.ell * math::exp(-p.alpha * t) * (math::cos(bt) + p.alpha / p.beta * math::sin(bt))
}

/// `alpha ~ U(3/8, 5/8)`, `beta ~ U(10/4, 15/4)`, `ell ~ U(-5/4, -3/4)`.
pub fn oscillator_param_map(xi: &[f64]) -> Result<OscillatorParams> {
    if xi.len() != 3 {
        return Err(Error::mismatch("oscillator takes three parameters"));
    }
    if xi.iter().any(|x| !(math::abs(*x) <= 1.0)) {
        return Err(Error::invalid("oscillator parameters must lie in [-1, 1]"));
    }
    Ok(OscillatorParams { alpha: 0.5 + 0.125 * xi[0], beta: 25.0 / 8.0 + 0.625 * xi[1], ell: -1.0 + 0.25 * xi[2] })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Oscillator;

impl Process for Oscillator {
    fn n_params(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<String> {
        ["alpha", "beta", "ell"].iter().map(|s| String::from(*s)).collect()
    }

    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> Result<()> {
        let p = oscillator_param_map(xi)?;
        for (o, &t) in out.iter_mut().zip(times) {
            *o = oscillator_eval(t, &p);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_conditions() {
        let p = oscillator_param_map(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, OscillatorParams { alpha: 0.5, beta: 25.0 / 8.0, ell: -1.0 });
        assert_eq!(oscillator_eval(0.0, &p), -1.0);
        let q = OscillatorParams { alpha: 0.3, beta: 2.0, ell: 1.7 };
        assert_eq!(oscillator_eval(0.0, &q), 1.7);
        let h = 1e-5;
        let d = (oscillator_eval(h, &p) - oscillator_eval(-h, &p)) / (2.0 * h);
        assert!(d.abs() < 1e-6);
    }

    #[test]
    fn satisfies_the_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-4;
        for _ in 0..100 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let p = oscillator_param_map(&xi).unwrap();
            for k in 1..100 {
                let t = k as f64 * 0.1;
                let y = |s: f64| oscillator_eval(s, &p);
                let d1 = (y(t + h) - y(t - h)) / (2.0 * h);
                let d2 = (y(t + h) - 2.0 * y(t) + y(t - h)) / (h * h);
                let res = d2 + 2.0 * p.alpha * d1 + (p.alpha * p.alpha + p.beta * p.beta) * y(t);
                assert!(res.abs() <= 1e-4 * p.ell.abs(), "residual {res} at t={t}");
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(oscillator_param_map(&[1.5, 0.0, 0.0]).is_err());
        assert!(oscillator_param_map(&[0.0, 0.0]).is_err());
    }
}
