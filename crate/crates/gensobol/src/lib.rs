//! IO, configuration and the command-line front end for `gensobol-core`.

pub mod artifact;
pub mod config;
pub mod error;
pub mod external;
pub mod parallel;
pub mod study;

pub use error::{Error, Result};
pub use gensobol_core as core;
pub use parallel::Parallel;
pub use study::Study;
