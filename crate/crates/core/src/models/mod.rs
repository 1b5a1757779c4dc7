//! Reference time-dependent processes `f(t, xi)` with `xi` in `[-1, 1]^Np`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;

mod cholera;
mod ode;
mod oscillator;

pub use cholera::{
    cholera_infected, cholera_param_map, cholera_rhs, cholera_trajectory, CholeraModel, CholeraParams, CholeraState,
    CHOLERA_PARAM_NAMES, CHOLERA_POPULATION,
};
pub use ode::{integrate_ode, OdeConfig};
pub use oscillator::{oscillator_eval, oscillator_param_map, Oscillator, OscillatorParams};

/// A time-dependent process with uncertain parameters.
///
/// Implementations must be pure functions of `(xi, times)`; the ensemble and
/// Monte Carlo layers call them concurrently.
pub trait Process: Sync {
    fn n_params(&self) -> usize;

    fn param_names(&self) -> Vec<String> {
        (1..=self.n_params()).map(|i| format!("xi{i}")).collect()
    }

    /// Write `f(times[m], xi)` into `out[m]`.
    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Adapts a closure `f(t, xi)` into a [`Process`].
pub struct FnProcess<F> {
    n_params: usize,
    f: F,
}

impl<F> FnProcess<F>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    pub fn new(n_params: usize, f: F) -> Self {
        Self { n_params, f }
    }
}

impl<F> Process for FnProcess<F>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &t) in out.iter_mut().zip(times) {
            *o = (self.f)(t, xi);
        }
        Ok(())
    }
}

impl<P: Process + ?Sized> Process for &P {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }

    fn param_names(&self) -> Vec<String> {
        (**self).param_names()
    }

    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).trajectory(xi, times, out)
    }
}
