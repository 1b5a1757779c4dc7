//! Generalized Sobol' sensitivity indices for time-dependent processes.
//!
//! A process `f(t, xi)` with independent `U(-1, 1)` parameters is summarized on a
//! time grid `{t_m, w_m}`. The generalized index of a parameter subset `U` is the
//! ratio of the time integral of its partial variance to the time integral of the
//! total variance, which is also a ratio of covariance-operator traces. Three
//! estimation routes are provided and can be cross-checked against each other:
//!
//! * pointwise-in-time polynomial chaos surrogates ([`pce`], [`sobol::pipeline`]),
//! * a Karhunen-Loeve decomposition of the sampled covariance ([`kl`]),
//! * direct Monte Carlo pick-freeze estimation ([`sobol::mc`]).
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats and the command line
//! live in the `gensobol` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod batch;
pub mod ensemble;
mod error;
pub mod kl;
pub mod linalg;
mod math;
pub mod models;
pub mod pce;
pub mod quadrature;
pub mod sobol;

pub use batch::{Batch, Sequential};
pub use error::{Error, Result};
