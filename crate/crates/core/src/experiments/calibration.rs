//! Relative-phase calibration from the zeros of the two spectroscopic lines.

use std::f64::consts::TAU;

use super::bloch::RateModel;
use super::spectroscopy::SpectroscopyConfig;
use super::ExperimentRecord;
use crate::error::{Error, Result};
use crate::fit::{fit_phase_response, FitResult, PhaseBranch, PhaseFitFixed};
use crate::lindblad::CollapseSet;
use crate::model::dressed_single_excitation;
use crate::units::rad_per_ns_to_ghz;

#[derive(Clone, Debug)]
pub struct PhaseCalibration {
    /// Source phase at which the ψ_s line is dark (rad).
    pub phi_zero_s: f64,
    /// Source phase at which the ψ_a line is dark (rad).
    pub phi_zero_a: f64,
    /// (φ_s − φ_a) mod 2π.
    pub difference: f64,
    pub xi_fit_a: f64,
    pub xi_fit_s: f64,
    pub s0_fit_a: f64,
    pub s0_fit_s: f64,
    pub fit_a: FitResult,
    pub fit_s: FitResult,
}

/// Fits the phase response at the grid frequencies closest to ω_a and ω_s,
/// holding each line's T2 and Rabi scale at their model values and T1 at
/// the mean time the excitation stays in the single-excitation manifold.
pub fn phase_calibration(records: &[ExperimentRecord], cfg: &SpectroscopyConfig) -> Result<PhaseCalibration> {
    let dressed = dressed_single_excitation(&cfg.device)?;
    let layout = cfg.device.layout()?;
    let collapses = CollapseSet::from_device(&cfg.device, &layout)?;
    let freqs: Vec<f64> = records.iter().filter_map(|r| r.coordinate("omega_d_ghz")).collect();
    if freqs.is_empty() {
        return Err(Error::InsufficientCoverage("records carry no drive frequencies".into()));
    }
    let nearest = |target: f64| {
        let t = rad_per_ns_to_ghz(target);
        freqs.iter().copied().min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs())).unwrap()
    };

    let lines = [
        (dressed.psi_a.clone(), dressed.omega_a),
        (dressed.psi_s.clone(), dressed.omega_s),
        (dressed.psi_r.clone(), dressed.omega_r_dressed),
    ];
    let model = RateModel::new(&lines, &dressed.ground, &collapses)?;
    let fit_line = |branch: PhaseBranch| -> Result<FitResult> {
        let (k, scale) = match branch {
            PhaseBranch::Antisymmetric => (0, 1.0),
            PhaseBranch::Symmetric => (1, dressed.theta_m.cos().abs()),
        };
        let omega = lines[k].1;
        let w = nearest(omega);
        let mut pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.coordinate("omega_d_ghz") == Some(w))
            .filter_map(|r| r.coordinate("phi_rad").map(|p| (p, r.value)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let fixed = PhaseFitFixed {
            t1: model.mean_residence_time(k)?,
            t2: model.lines()[k].rates.t2(),
            rabi_scale: 2.0 * cfg.epsilon * scale,
        };
        let (phi, s): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        fit_phase_response(&phi, &s, fixed, branch)
    };

    let fit_a = fit_line(PhaseBranch::Antisymmetric)?;
    let fit_s = fit_line(PhaseBranch::Symmetric)?;
    let phi_zero_a = fit_a.get("phi0").unwrap();
    let phi_zero_s = fit_s.get("phi0").unwrap() + PhaseBranch::Symmetric.zero_offset();
    Ok(PhaseCalibration {
        phi_zero_s,
        phi_zero_a,
        difference: (phi_zero_s - phi_zero_a).rem_euclid(TAU),
        xi_fit_a: fit_a.get("xi").unwrap(),
        xi_fit_s: fit_s.get("xi").unwrap(),
        s0_fit_a: fit_a.get("s0").unwrap(),
        s0_fit_s: fit_s.get("s0").unwrap(),
        fit_a,
        fit_s,
    })
}
