//! User-supplied simulations ingested from an ensemble file.

use std::collections::HashMap;
use std::path::Path;

use gensobol_core::ensemble::Ensemble;
use gensobol_core::models::Process;
use gensobol_core::Error as CoreError;

use crate::artifact::{read_ensemble, EnsembleHeader};
use crate::error::Result;

/// A table of trajectories treated as a black-box process. It answers only at
/// its stored samples and on its stored grid.
#[derive(Debug, Clone)]
pub struct ExternalTableModel {
    header: EnsembleHeader,
    ensemble: Ensemble,
    lookup: HashMap<Vec<u64>, usize>,
}

fn bits(xi: &[f64]) -> Vec<u64> {
    xi.iter().map(|x| x.to_bits()).collect()
}

impl ExternalTableModel {
    /// Read and validate (monotone grid, matrix sizes against the header).
    pub fn load(path: &Path) -> Result<Self> {
        let (header, ensemble) = read_ensemble(path)?;
        Ok(Self::new(header, ensemble))
    }

    pub fn new(header: EnsembleHeader, ensemble: Ensemble) -> Self {
        let samples = ensemble.samples();
        let lookup = (0..samples.len()).map(|k| (bits(samples.point(k)), k)).collect();
        Self { header, ensemble, lookup }
    }

    pub fn header(&self) -> &EnsembleHeader {
        &self.header
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }
}

impl Process for ExternalTableModel {
    fn n_params(&self) -> usize {
        self.header.np
    }

    fn param_names(&self) -> Vec<String> {
        self.header.param_names.clone()
    }

    fn trajectory(&self, xi: &[f64], times: &[f64], out: &mut [f64]) -> gensobol_core::Result<()> {
        if times != self.ensemble.time_rule().nodes() {
            return Err(CoreError::InvalidArgument("external table is only defined on its own grid".into()));
        }
        let k = *self
            .lookup
            .get(&bits(xi))
            .ok_or_else(|| CoreError::InvalidArgument(format!("xi = {xi:?} is not a sample of the external table")))?;
        out.copy_from_slice(self.ensemble.trajectory(k));
        Ok(())
    }
}
