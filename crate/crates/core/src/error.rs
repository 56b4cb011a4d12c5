use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// A physics or API precondition was not met by the caller.
    Precondition,
    /// A numerical invariant broke during a computation.
    Numerical,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid Fock truncation n_max = {0} (need n_max >= {1})")]
    InvalidTruncation(usize, usize),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("operator is not Hermitian (max |A - A^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("qubits are not resonant (max |omega_q[i] - omega_q[j]| = {0:.3e} rad/ns)")]
    NotResonant(f64),

    #[error("qubit couplings differ beyond tolerance (relative spread {0:.3e})")]
    UnequalCouplings(f64),

    #[error("drive Hamiltonian supports exactly two qubits, got {0}")]
    UnsupportedDrive(usize),

    #[error("J-coupling undefined at zero qubit-cavity detuning")]
    JUndefined,

    #[error("state is not normalized (norm = {0:.15})")]
    Unnormalized(f64),

    #[error("steady state is not unique (null space dimension > 1, pivot ratio {0:.3e})")]
    NonUniqueSteadyState(f64),

    #[error("no dissipation: steady state requires at least one collapse operator with positive rate")]
    NoDissipation,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("time grid error: {0}")]
    TimeGrid(String),

    #[error("invariant violated at step {step} (t = {time} ns): {detail}")]
    InvariantViolation { step: usize, time: f64, detail: String },

    #[error("steady-state residual {0:.3e} exceeds tolerance")]
    SteadyStateResidual(f64),

    #[error("fit is rank deficient: unidentifiable parameter combination {0}")]
    RankDeficient(String),

    #[error("fit input error: {0}")]
    FitInput(String),

    #[error("insufficient phase coverage: {0}")]
    InsufficientCoverage(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvariantViolation { .. }
            | Error::SteadyStateResidual(_)
            | Error::RankDeficient(_) => ErrorKind::Numerical,
            _ => ErrorKind::Precondition,
        }
    }
}
