//! Free decay of a prepared single-excitation state, fitted with a single
//! exponential, and its dependence on the qubit-cavity detuning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{population, ExperimentRecord, RecordMeta};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential, FitResult};
use crate::lindblad::{CollapseSet, DensityMatrix, EvolveOptions, Evolver, Trajectory};
use crate::model::{build_htc, dressed_single_excitation, rotating_frame, DeviceParams};
use crate::operator::{hermitian_eig, StateVector};

/// Detunings closer to resonance than this multiple of g mix the cavity and
/// qubits too strongly for a single-exponential lifetime.
pub const DETUNING_GUARD: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    PsiA,
    PsiS,
    /// First qubit excited, second qubit decoupled from the cavity.
    Eg,
    /// Second qubit excited, first qubit decoupled from the cavity.
    Ge,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::PsiA, Target::PsiS, Target::Eg, Target::Ge];

    pub fn label(self) -> &'static str {
        match self {
            Target::PsiA => "psi_a",
            Target::PsiS => "psi_s",
            Target::Eg => "eg",
            Target::Ge => "ge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.label() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeConfig {
    pub device: DeviceParams,
    pub target: Target,
    /// Δ = ω_q − ω_r applied to both qubits (rad/ns).
    pub delta: f64,
    /// Delays after preparation (ns); starts at 0.
    pub delay_grid: Vec<f64>,
}

impl LifetimeConfig {
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        validate_delays(&self.delay_grid)?;
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        Ok(())
    }
}

fn validate_delays(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::TimeGrid("delay grid must start at 0".into()));
    }
    if grid.len() < 4 {
        return Err(Error::TimeGrid("delay grid needs at least 4 points for a fit".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::TimeGrid("delay grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct LifetimeResult {
    pub records: Vec<ExperimentRecord>,
    /// The exponential fit, or why it failed. Records are kept either way.
    pub fit: std::result::Result<FitResult, Error>,
    pub integrator_step: f64,
}

impl LifetimeResult {
    /// Fitted T1 in ns: ∞ for a non-decaying trace, NaN when the fit failed.
    pub fn t1(&self) -> f64 {
        match &self.fit {
            Ok(f) => f.get("t1").unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }
}

/// Device used to evolve `target` and the state prepared for it. Collective
/// targets use the analytic dressed states; single-qubit targets decouple
/// the partner (g = 0) and take the eigenstate closest to the bare
/// excitation.
fn preparation(device: &DeviceParams, target: Target) -> Result<(DeviceParams, StateVector)> {
    match target {
        Target::PsiA | Target::PsiS => {
            let dressed = dressed_single_excitation(device)?;
            let state = if target == Target::PsiA { dressed.psi_a } else { dressed.psi_s };
            Ok((device.clone(), state))
        }
        Target::Eg | Target::Ge => {
            if device.n_qubits() != 2 {
                return Err(Error::InvalidParameter("single-qubit targets need two qubits".into()));
            }
            let excited = if target == Target::Eg { 0 } else { 1 };
            let mut d = device.clone();
            d.g[1 - excited] = 0.0;
            let layout = d.layout()?;
            let mut bits = [false; 2];
            bits[excited] = true;
            let bare = StateVector::fock(&layout, 0, &bits)?;
            let eig = hermitian_eig(&build_htc(&layout, &d)?)?;
            let best = (0..layout.total_dim())
                .max_by(|&i, &j| {
                    let oi = eig.vector(&layout, i).inner(&bare).norm();
                    let oj = eig.vector(&layout, j).inner(&bare).norm();
                    oi.total_cmp(&oj)
                })
                .unwrap();
            Ok((d, eig.vector(&layout, best)))
        }
    }
}

fn evolver_for(device: &DeviceParams) -> Result<Evolver> {
    let layout = device.layout()?;
    let h = rotating_frame(&build_htc(&layout, device)?, device.omega_q[0]);
    let collapses = CollapseSet::from_device(device, &layout)?;
    Evolver::new(&h, &collapses, EvolveOptions::default())
}

fn finish(target: Target, state: &StateVector, traj: &Trajectory, n_max: usize) -> Result<LifetimeResult> {
    let records = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, rho)| {
            Ok(ExperimentRecord {
                coordinates: vec![("delay_ns".into(), t)],
                observable: format!("population_{}", target.label()),
                value: population(rho.population(state))?,
                meta: RecordMeta { n_max, integrator_step: Some(traj.step) },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = records.iter().map(|r| r.value).collect();
    Ok(LifetimeResult { fit: fit_exponential(&traj.times, &y), records, integrator_step: traj.step })
}

/// Prepares the target at t = 0 and records its population at every delay.
pub fn run_lifetime(cfg: &LifetimeConfig) -> Result<LifetimeResult> {
    run_lifetime_with(cfg, EvolveOptions::default())
}

/// As [`run_lifetime`] with explicit integration settings.
pub fn run_lifetime_with(cfg: &LifetimeConfig, opts: EvolveOptions) -> Result<LifetimeResult> {
    cfg.validate()?;
    let device = cfg.device.with_detuning(cfg.delta);
    let (dev, state) = preparation(&device, cfg.target)?;
    let layout = dev.layout()?;
    let h = rotating_frame(&build_htc(&layout, &dev)?, dev.omega_q[0]);
    let collapses = CollapseSet::from_device(&dev, &layout)?;
    let evolver = Evolver::new(&h, &collapses, opts)?;
    let traj = evolver.run(&DensityMatrix::pure(&state)?, &cfg.delay_grid)?;
    finish(cfg.target, &state, &traj, dev.n_max)
}

/// Fitted lifetime of one state at one detuning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// rad/ns
    pub delta: f64,
    pub target: Target,
    /// ns; ∞ for non-decaying, NaN when the fit failed.
    pub t1: f64,
    pub t1_error: f64,
    pub converged: bool,
    /// Integrator step used for this trajectory, ns.
    pub integrator_step: f64,
}

/// Lifetimes of all four targets at every detuning, sorted by detuning and
/// target.
pub fn run_detuning_sweep(device: &DeviceParams, delay_grid: &[f64], delta_grid: &[f64]) -> Result<Vec<SweepRow>> {
    device.validate()?;
    validate_delays(delay_grid)?;
    if delta_grid.is_empty() {
        return Err(Error::InvalidParameter("detuning grid is empty".into()));
    }
    let g = device.g.iter().copied().fold(0.0, f64::max);
    for &delta in delta_grid {
        if !(delta.abs() >= DETUNING_GUARD * g) {
            return Err(Error::InvalidParameter(format!(
                "detuning {delta} rad/ns is inside the strong-mixing region |delta| < {DETUNING_GUARD} g"
            )));
        }
    }
    let per_delta = delta_grid
        .par_iter()
        .map(|&delta| -> Result<Vec<SweepRow>> {
            let dev = device.with_detuning(delta);
            let mut results = Vec::with_capacity(4);
            // ψ_a and ψ_s share one generator.
            let dressed = dressed_single_excitation(&dev)?;
            let evolver = evolver_for(&dev)?;
            let rho_a = DensityMatrix::pure(&dressed.psi_a)?;
            let rho_s = DensityMatrix::pure(&dressed.psi_s)?;
            let trajs = evolver.run_many(&[&rho_a, &rho_s], delay_grid)?;
            results.push((Target::PsiA, finish(Target::PsiA, &dressed.psi_a, &trajs[0], dev.n_max)?));
            results.push((Target::PsiS, finish(Target::PsiS, &dressed.psi_s, &trajs[1], dev.n_max)?));
            for target in [Target::Eg, Target::Ge] {
                let (d, state) = preparation(&dev, target)?;
                let traj = evolver_for(&d)?.run(&DensityMatrix::pure(&state)?, delay_grid)?;
                results.push((target, finish(target, &state, &traj, d.n_max)?));
            }
            Ok(results
                .into_iter()
                .map(|(target, r)| {
                    let (t1_error, converged) = match &r.fit {
                        Ok(f) => (f.error_of("t1").unwrap_or(f64::NAN), f.converged),
                        Err(_) => (f64::NAN, false),
                    };
                    SweepRow { delta, target, t1: r.t1(), t1_error, converged, integrator_step: r.integrator_step }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = per_delta.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.target.cmp(&b.target)));
    Ok(rows)
}
