//! Simulated experiments: phase-resolved spectroscopy of the dressed lines
//! and delayed-readout lifetime measurements across detuning.

pub mod bloch;
pub mod calibration;
pub mod lifetime;
pub mod spectroscopy;

use serde::Serialize;

use crate::error::{Error, Result};

pub use bloch::{bloch_steady_state, bloch_steady_state_detuned, transition_rates, RateModel, TransitionRates};
pub use calibration::{phase_calibration, PhaseCalibration};
pub use lifetime::{run_detuning_sweep, run_lifetime, LifetimeConfig, LifetimeResult, SweepRow, Target};
pub use spectroscopy::{run_spectroscopy, SpectroscopyConfig, SpectroscopyMode};

/// Upper tolerance on population records above 1.
pub const POPULATION_TOL: f64 = 1e-8;

/// Provenance attached to every record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordMeta {
    pub n_max: usize,
    /// Largest integrator step in ns; absent for steady-state results.
    pub integrator_step: Option<f64>,
}

/// One sample of a sweep: named coordinates and one observable value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub coordinates: Vec<(String, f64)>,
    pub observable: String,
    pub value: f64,
    pub meta: RecordMeta,
}

impl ExperimentRecord {
    pub fn coordinate(&self, name: &str) -> Option<f64> {
        self.coordinates.iter().find(|(n, _)| n == name).map(|c| c.1)
    }
}

/// Clips a population to [0, 1 + 1e−8], rejecting values outside the
/// numerical tolerance band.
pub(crate) fn population(value: f64) -> Result<f64> {
    if !(value >= -POPULATION_TOL && value <= 1.0 + POPULATION_TOL) {
        return Err(Error::InvariantViolation {
            step: 0,
            time: f64::NAN,
            detail: format!("population {value} outside [0, 1]"),
        });
    }
    Ok(value.max(0.0))
}

/// Non-empty and strictly monotone in either direction.
pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} contains non-finite values")));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidParameter(format!("{name} is not strictly monotone")));
    }
    Ok(())
}

/// `points` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points).map(|k| start + (stop - start) * k as f64 / (points - 1) as f64).collect(),
    }
}
