//! Phase-resolved steady-state spectroscopy of the single-excitation lines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bloch::RateModel;
use super::{check_grid, population, ExperimentRecord, RecordMeta};
use crate::error::{Error, Result};
use crate::lindblad::{steady_state_of, CollapseSet, Liouvillian};
use crate::model::{
    build_htc, dressed_single_excitation, excitation_number, manifold_projector, qubit_op, DeviceParams,
    DressedStates,
};
use crate::operator::{Operator, Pauli, StateVector, I};
use crate::units::rad_per_ns_to_ghz;
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectroscopyMode {
    /// Rate equations over the dressed lines with Bloch pumping terms.
    Analytic,
    /// Steady state of the full driven master equation.
    MasterEquation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectroscopyConfig {
    pub device: DeviceParams,
    /// Drive strength ε (rad/ns).
    pub epsilon: f64,
    pub xi: f64,
    /// Relative phases set at the source (rad).
    pub phi_grid: Vec<f64>,
    /// Drive frequencies (rad/ns).
    pub omega_d_grid: Vec<f64>,
    /// Extra relative phase accumulated between the ψ_a and ψ_s line
    /// frequencies by a cable-length difference (rad).
    pub phase_offset: f64,
}

impl SpectroscopyConfig {
    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        check_grid("phi grid", &self.phi_grid)?;
        check_grid("drive frequency grid", &self.omega_d_grid)?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("drive strength must be positive, got {}", self.epsilon)));
        }
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return Err(Error::InvalidParameter(format!("imbalance xi must be >= 0, got {}", self.xi)));
        }
        if !self.phase_offset.is_finite() {
            return Err(Error::InvalidParameter("phase offset must be finite".into()));
        }
        Ok(())
    }

    /// Relative phase reaching the qubits at drive frequency ω_d. A delay τ
    /// on the second line adds ω_d·τ; the reference is chosen so the ψ_a
    /// line is dark at φ = phase_offset, and τ = phase_offset/(ω_a − ω_s)
    /// so the two line zeros sit π + phase_offset apart.
    pub fn effective_phase(&self, phi: f64, omega_d: f64, dressed: &DressedStates) -> f64 {
        let tau = self.phase_offset / (dressed.omega_a - dressed.omega_s);
        phi - self.phase_offset + tau * (omega_d - dressed.omega_a)
    }
}

/// Drive couplings split as H_d(φ) = A + cos φ·B + sin φ·C.
struct DriveParts {
    a: Operator,
    b: Operator,
    c: Operator,
}

fn drive_parts(cfg: &SpectroscopyConfig, layout: &crate::operator::SpaceLayout) -> Result<DriveParts> {
    let sp1 = qubit_op(Pauli::Plus, layout, 0)?;
    let sp2 = qubit_op(Pauli::Plus, layout, 1)?;
    let x1 = &sp1 + &sp1.dagger();
    let x2 = &sp2 + &sp2.dagger();
    let y2 = (&sp2 - &sp2.dagger()).scale(I);
    Ok(DriveParts {
        a: x1.scale(cfg.epsilon),
        b: x2.scale(cfg.epsilon * cfg.xi),
        c: y2.scale(cfg.epsilon * cfg.xi),
    })
}

/// Steady-state single-excitation population on the (φ, ω_d) grid, sorted
/// by φ then ω_d.
pub fn run_spectroscopy(cfg: &SpectroscopyConfig, mode: SpectroscopyMode) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let dressed = dressed_single_excitation(&cfg.device)?;
    let layout = cfg.device.layout()?;
    let collapses = CollapseSet::from_device(&cfg.device, &layout)?;
    let parts = drive_parts(cfg, &layout)?;

    let mut points: Vec<(f64, f64)> = cfg
        .phi_grid
        .iter()
        .flat_map(|&phi| cfg.omega_d_grid.iter().map(move |&w| (phi, w)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let values: Vec<f64> = match mode {
        SpectroscopyMode::Analytic => {
            let lines = [
                (dressed.psi_a.clone(), dressed.omega_a),
                (dressed.psi_s.clone(), dressed.omega_s),
                (dressed.psi_r.clone(), dressed.omega_r_dressed),
            ];
            let model = RateModel::new(&lines, &dressed.ground, &collapses)?;
            // ⟨ψ|H_d(φ)|g⟩ = u_A + cos φ·u_B + sin φ·u_C per line.
            let elems: Vec<[C64; 3]> = lines
                .iter()
                .map(|(s, _)| {
                    [&parts.a, &parts.b, &parts.c].map(|op| op.matrix_element(s, &dressed.ground))
                })
                .collect();
            points
                .iter()
                .map(|&(phi, w)| {
                    let pe = cfg.effective_phase(phi, w, &dressed);
                    let rabi: Vec<f64> = elems
                        .iter()
                        .map(|u| 2.0 * (u[0] + u[1] * pe.cos() + u[2] * pe.sin()).norm())
                        .collect();
                    let p = model.populations(&rabi, w)?;
                    population(p.iter().sum())
                })
                .collect::<Result<_>>()?
        }
        SpectroscopyMode::MasterEquation => {
            let h0 = build_htc(&layout, &cfg.device)?;
            let l_static = Liouvillian::new(&h0, &collapses)?;
            let l_n = Liouvillian::coherent(&excitation_number(&layout))?;
            let l_a = Liouvillian::coherent(&parts.a)?;
            let l_b = Liouvillian::coherent(&parts.b)?;
            let l_c = Liouvillian::coherent(&parts.c)?;
            let base = l_static.scaled_add(&l_a, 1.0);
            let p1 = manifold_projector(&layout, 1);
            points
                .par_iter()
                .map(|&(phi, w)| {
                    let pe = cfg.effective_phase(phi, w, &dressed);
                    let l = base.scaled_add(&l_n, -w).scaled_add(&l_b, pe.cos()).scaled_add(&l_c, pe.sin());
                    let rho = steady_state_of(&l)?;
                    population(rho.expectation(&p1).re)
                })
                .collect::<Result<_>>()?
        }
    };

    Ok(points
        .iter()
        .zip(values)
        .map(|(&(phi, w), value)| ExperimentRecord {
            coordinates: vec![("phi_rad".into(), phi), ("omega_d_ghz".into(), rad_per_ns_to_ghz(w))],
            observable: "population".into(),
            value,
            meta: RecordMeta { n_max: cfg.device.n_max, integrator_step: None },
        })
        .collect())
}

/// Rabi frequency 2|⟨ψ|H_d|g⟩| of `state` at source phase φ and drive
/// frequency ω_d, including the configured phase offset.
pub fn line_rabi_frequency(
    cfg: &SpectroscopyConfig,
    dressed: &DressedStates,
    state: &StateVector,
    phi: f64,
    omega_d: f64,
) -> Result<f64> {
    let parts = drive_parts(cfg, state.layout())?;
    let pe = cfg.effective_phase(phi, omega_d, dressed);
    let h = &(&parts.a + &parts.b.scale(pe.cos())) + &parts.c.scale(pe.sin());
    Ok(2.0 * h.matrix_element(state, &dressed.ground).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::linspace;
    use crate::model::{drive_hamiltonian, DriveParams};
    use crate::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};
    use std::f64::consts::{PI, TAU};

    fn config(phi_grid: Vec<f64>, omega_d_grid: Vec<f64>) -> SpectroscopyConfig {
        SpectroscopyConfig {
            device: DeviceParams::reference_sample(),
            epsilon: mhz_to_rad_per_ns(0.05),
            xi: 1.0,
            phi_grid,
            omega_d_grid,
            phase_offset: 0.0,
        }
    }

    #[test]
    fn drive_decomposition_matches_drive_hamiltonian() {
        let cfg = config(vec![0.0], vec![1.0]);
        let layout = cfg.device.layout().unwrap();
        let parts = drive_parts(&cfg, &layout).unwrap();
        for phi in [0.0, 0.7, 2.0, 4.5] {
            let composed = &(&parts.a + &parts.b.scale(f64::cos(phi))) + &parts.c.scale(f64::sin(phi));
            let direct = drive_hamiltonian(&layout, &DriveParams::new(cfg.epsilon, 1.0, phi, 0.0).unwrap()).unwrap();
            assert!((&composed - &direct).max_abs() < 1e-15);
        }
    }

    #[test]
    fn effective_phase_places_the_zeros() {
        let mut cfg = config(vec![0.0], vec![1.0]);
        cfg.phase_offset = -0.3;
        let dressed = dressed_single_excitation(&cfg.device).unwrap();
        assert!(cfg.effective_phase(-0.3, dressed.omega_a, &dressed).abs() < 1e-15);
        // ψ_s is dark at effective phase π.
        let phi_s = PI + 2.0 * cfg.phase_offset;
        assert!((cfg.effective_phase(phi_s, dressed.omega_s, &dressed) - PI).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = config(vec![], vec![1.0]);
        assert!(cfg.validate().is_err());
        cfg.phi_grid = vec![0.0, 0.0];
        assert!(cfg.validate().is_err());
        cfg.phi_grid = vec![0.0];
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn analytic_dark_and_bright_lines() {
        let d = DeviceParams::reference_sample();
        let dressed = dressed_single_excitation(&d).unwrap();
        let cfg = config(vec![0.0, PI], vec![dressed.omega_s, dressed.omega_a]);
        let recs = run_spectroscopy(&cfg, SpectroscopyMode::Analytic).unwrap();
        let at = |phi: f64, w: f64| {
            recs.iter()
                .find(|r| r.coordinate("phi_rad") == Some(phi) && r.coordinate("omega_d_ghz") == Some(rad_per_ns_to_ghz(w)))
                .unwrap()
                .value
        };
        let peak = at(0.0, dressed.omega_s).max(at(PI, dressed.omega_a));
        // Residual population at a dark line comes from the other line's
        // far-detuned tail and dephasing transfer.
        assert!(at(0.0, dressed.omega_a) < 1e-2 * peak);
        assert!(at(PI, dressed.omega_s) < 1e-2 * peak);
        assert!(at(0.0, dressed.omega_s) > 0.01);
        assert!(at(PI, dressed.omega_a) > 0.01);
    }

    #[test]
    fn relabeling_symmetry() {
        let d = DeviceParams::reference_sample();
        let dressed = dressed_single_excitation(&d).unwrap();
        let phis = vec![-2.0, -0.5, 0.3, 1.1];
        let ws = vec![dressed.omega_s, 0.5 * (dressed.omega_s + dressed.omega_a), dressed.omega_a];
        let mut cfg = config(phis.clone(), ws.clone());
        cfg.xi = 1.0;
        let mirrored = config(phis.iter().map(|p| -p).collect(), ws);
        for mode in [SpectroscopyMode::Analytic, SpectroscopyMode::MasterEquation] {
            let a = run_spectroscopy(&cfg, mode).unwrap();
            let b = run_spectroscopy(&mirrored, mode).unwrap();
            for ra in &a {
                let rb = b
                    .iter()
                    .find(|r| {
                        r.coordinate("phi_rad") == ra.coordinate("phi_rad").map(|p| -p)
                            && r.coordinate("omega_d_ghz") == ra.coordinate("omega_d_ghz")
                    })
                    .unwrap();
                assert!((ra.value - rb.value).abs() < 1e-12, "{mode:?}: {} vs {}", ra.value, rb.value);
            }
        }
    }

    #[test]
    fn analytic_and_master_agree_in_weak_drive() {
        let d = DeviceParams::reference_sample();
        let dressed = dressed_single_excitation(&d).unwrap();
        let step = mhz_to_rad_per_ns(1.0);
        let around = |w0: f64| (-6..=6).map(|k| w0 + k as f64 * step).collect::<Vec<_>>();
        let mut ws = around(dressed.omega_s);
        ws.extend(around(dressed.omega_a));
        let mut cfg = config(vec![0.0, PI / 2.0, PI], ws);
        cfg.epsilon = mhz_to_rad_per_ns(0.02);
        let an = run_spectroscopy(&cfg, SpectroscopyMode::Analytic).unwrap();
        let me = run_spectroscopy(&cfg, SpectroscopyMode::MasterEquation).unwrap();
        let peak = me.iter().map(|r| r.value).fold(0.0, f64::max);
        for phi in &cfg.phi_grid {
            for half in [&cfg.omega_d_grid[..13], &cfg.omega_d_grid[13..]] {
                let pick = |recs: &[ExperimentRecord]| -> Vec<f64> {
                    half.iter()
                        .map(|w| {
                            recs.iter()
                                .find(|r| r.coordinate("phi_rad") == Some(*phi) && r.coordinate("omega_d_ghz") == Some(rad_per_ns_to_ghz(*w)))
                                .unwrap()
                                .value
                        })
                        .collect()
                };
                let (a, m) = (pick(&an), pick(&me));
                let argmax = |v: &[f64]| (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
                let (pa, pm) = (a[argmax(&a)], m[argmax(&m)]);
                if pm < 0.05 * peak {
                    continue;
                }
                assert!((argmax(&a) as i64 - argmax(&m) as i64).abs() <= 1);
                assert!((pa / pm - 1.0).abs() < 0.05, "phi {phi}: {pa} vs {pm}");
            }
        }
    }

    #[test]
    fn records_are_sorted_and_bounded() {
        let cfg = config(linspace(TAU, 0.0, 5), linspace(ghz_to_rad_per_ns(6.70), ghz_to_rad_per_ns(6.50), 7));
        let recs = run_spectroscopy(&cfg, SpectroscopyMode::Analytic).unwrap();
        assert_eq!(recs.len(), 35);
        for w in recs.windows(2) {
            let key = |r: &ExperimentRecord| (r.coordinate("phi_rad").unwrap(), r.coordinate("omega_d_ghz").unwrap());
            assert!(key(&w[0]) < key(&w[1]));
        }
        assert!(recs.iter().all(|r| r.value >= 0.0 && r.value <= 1.0 + 1e-8));
    }
}
