//! Simulation of two transmon qubits coupled to a lossy cavity: the
//! Tavis-Cummings model, its single-excitation dressed states, Lindblad
//! dynamics, simulated spectroscopy and lifetime experiments, and the fits
//! used to analyse them.
//!
//! Units: angular frequencies in rad/ns, rates in 1/ns, times in ns.
//! Basis ordering: cavity first, then qubits in order, each qubit in (g, e).

pub mod error;
pub mod experiments;
pub mod fit;
pub mod lindblad;
pub mod model;
pub mod operator;
pub mod units;

pub use error::{Error, ErrorKind, Result};
pub use experiments::{
    phase_calibration, run_detuning_sweep, run_lifetime, run_spectroscopy, ExperimentRecord, LifetimeConfig,
    SpectroscopyConfig, SpectroscopyMode, Target,
};
pub use fit::{fit_exponential, fit_phase_response, least_squares, Bounds, FitResult, PhaseBranch};
pub use lindblad::{
    evolve, evolve_direct, evolve_piecewise, evolve_with, lindblad_rhs, observable_series, steady_state,
    steady_state_of, Collapse, CollapseSet, DensityMatrix, EvolveOptions, Evolver, Liouvillian, Segment, Trajectory,
};
pub use model::{
    build_htc, dark_state_condition, dressed_single_excitation, drive_hamiltonian, j_coupling, purcell_rate,
    transition_matrix_element, DarkState, DeviceParams, DressedStates, DriveParams,
};
pub use operator::{hermitian_eig, CMatrix, CVector, Eigensystem, Operator, Pauli, SpaceLayout, StateVector};
