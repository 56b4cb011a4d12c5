//! Steady states of driven two-level transitions and of the rate model
//! that couples the dressed single-excitation lines.
//!
//! Ω everywhere is the Rabi frequency of the transition, twice the matrix
//! element |⟨g|H_d|ψ⟩|.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lindblad::CollapseSet;
use crate::operator::StateVector;

/// {1 − 1/(1 + T1·T2·Ω²)}/2, the resonant excited-state population.
pub fn bloch_steady_state(t1: f64, t2: f64, omega: f64) -> Result<f64> {
    bloch_steady_state_detuned(t1, t2, omega, 0.0)
}

/// ½·T1T2Ω² / (1 + T2²δ² + T1T2Ω²) for drive detuning δ.
pub fn bloch_steady_state_detuned(t1: f64, t2: f64, omega: f64, delta: f64) -> Result<f64> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::InvalidParameter(format!("T1 and T2 must be positive, got {t1} and {t2}")));
    }
    if t1.is_infinite() || t2.is_infinite() {
        return Err(Error::InvalidParameter("T1 and T2 must be finite".into()));
    }
    let sat = t1 * t2 * omega * omega;
    Ok(0.5 * sat / (1.0 + (t2 * delta).powi(2) + sat))
}

/// Population relaxation and coherence decay of the transition ground ↔ ψ
/// under a set of collapse channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRates {
    /// Total rate out of ψ, 1/T1.
    pub gamma1: f64,
    /// Decay rate of the ground-ψ coherence, 1/T2.
    pub gamma2: f64,
}

impl TransitionRates {
    pub fn t1(&self) -> f64 {
        1.0 / self.gamma1
    }

    pub fn t2(&self) -> f64 {
        1.0 / self.gamma2
    }
}

/// Γ1 = Σ r(⟨c†c⟩_ψ − |⟨c⟩_ψ|²) and
/// Γ2 = Σ r[½(⟨c†c⟩_ψ + ⟨c†c⟩_g) − Re(⟨c⟩_g·conj⟨c⟩_ψ)].
pub fn transition_rates(state: &StateVector, ground: &StateVector, collapses: &CollapseSet) -> Result<TransitionRates> {
    let mut gamma1 = 0.0;
    let mut gamma2 = 0.0;
    for ch in collapses.iter() {
        let c = &ch.operator;
        let ctc = &c.dagger() * c;
        let (n_psi, n_g) = (ctc.expectation(state).re, ctc.expectation(ground).re);
        let (c_psi, c_g) = (c.expectation(state), c.expectation(ground));
        gamma1 += ch.rate * (n_psi - c_psi.norm_sqr());
        gamma2 += ch.rate * (0.5 * (n_psi + n_g) - (c_g * c_psi.conj()).re);
    }
    if !(gamma1 > 0.0 && gamma2 > 0.0) {
        return Err(Error::NoDissipation);
    }
    Ok(TransitionRates { gamma1, gamma2 })
}

/// One driven transition from the ground state.
#[derive(Clone, Debug)]
pub struct Line {
    pub state: StateVector,
    /// Transition frequency (rad/ns).
    pub omega: f64,
    pub rates: TransitionRates,
}

/// Populations of several excited states pumped incoherently from a shared
/// ground state, with dissipative transfer between them:
///
/// dp_i/dt = R_i(p_g − p_i) − Γ1_i p_i + Σ_j k_{j→i} p_j
///
/// where R_i = ½Ω_i²T2_i / (1 + T2_i²δ_i²). Without transfer each line
/// reduces to the detuned Bloch steady state.
#[derive(Clone, Debug)]
pub struct RateModel {
    lines: Vec<Line>,
    /// transfer[(i, j)] = k_{j→i}
    transfer: DMatrix<f64>,
}

impl RateModel {
    pub fn new(states: &[(StateVector, f64)], ground: &StateVector, collapses: &CollapseSet) -> Result<Self> {
        let lines = states
            .iter()
            .map(|(s, w)| Ok(Line { state: s.clone(), omega: *w, rates: transition_rates(s, ground, collapses)? }))
            .collect::<Result<Vec<_>>>()?;
        let n = lines.len();
        let mut transfer = DMatrix::zeros(n, n);
        for ch in collapses.iter() {
            for j in 0..n {
                let out = ch.operator.apply(&lines[j].state);
                for i in 0..n {
                    if i != j {
                        transfer[(i, j)] += ch.rate * lines[i].state.inner(&out).norm_sqr();
                    }
                }
            }
        }
        Ok(Self { lines, transfer })
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// k_{from→to}
    pub fn transfer_rate(&self, from: usize, to: usize) -> f64 {
        self.transfer[(to, from)]
    }

    /// Mean time the undriven system spends in any of the lines after
    /// starting in line `i`: Σ_j (M⁻¹)_{ji} with M = diag(Γ1) − K. This is
    /// the lifetime that sets the weak-drive response of the total
    /// population when pumping line `i`.
    pub fn mean_residence_time(&self, i: usize) -> Result<f64> {
        let n = self.lines.len();
        let mut m = -self.transfer.clone();
        for k in 0..n {
            m[(k, k)] = self.lines[k].rates.gamma1;
        }
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let x = m
            .lu()
            .solve(&e)
            .ok_or_else(|| Error::InvalidParameter("singular rate equations".into()))?;
        Ok(x.sum())
    }

    /// Steady-state populations for Rabi frequencies `rabi[i]` at drive
    /// frequency `omega_d`.
    pub fn populations(&self, rabi: &[f64], omega_d: f64) -> Result<Vec<f64>> {
        let n = self.lines.len();
        if rabi.len() != n {
            return Err(Error::InvalidParameter(format!("{} Rabi frequencies for {n} lines", rabi.len())));
        }
        let pump: Vec<f64> = self
            .lines
            .iter()
            .zip(rabi)
            .map(|(l, &om)| {
                let t2 = l.rates.t2();
                0.5 * om * om * t2 / (1.0 + (t2 * (omega_d - l.omega)).powi(2))
            })
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = -pump[i] + self.transfer[(i, j)];
            }
            m[(i, i)] -= pump[i] + self.lines[i].rates.gamma1;
        }
        let rhs = DVector::from_iterator(n, pump.iter().map(|r| -r));
        let p = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidParameter("singular rate equations".into()))?;
        Ok(p.iter().copied().collect())
    }
}
