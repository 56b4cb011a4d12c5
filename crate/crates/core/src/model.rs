//! Tavis-Cummings Hamiltonian, local qubit drives and the closed-form
//! single-excitation dressed states of two resonant qubits.
//!
//! Units: angular frequencies and couplings in rad/ns, rates in 1/ns.
//! Detuning is Δ = ω_q − ω_r.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{annihilation, embed, pauli, Operator, Pauli, SpaceLayout, StateVector};
use crate::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns, rate_from_lifetime_ns};

/// Frequencies closer than this are treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Relative spread allowed between the two couplings of the dressed-state formula.
pub const COUPLING_REL_TOL: f64 = 1e-6;
const NORM_TOL: f64 = 1e-9;

/// Cavity and qubit parameters. Per-qubit vectors share one length, the
/// number of qubits.
///
/// The transmon Josephson and charging energies of the physical sample
/// (E_J/h ≈ 37.6 GHz, E_C/h ≈ 285 MHz) are not represented; qubits are
/// strictly two-level here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega_r: f64,
    pub omega_q: Vec<f64>,
    pub g: Vec<f64>,
    pub kappa: f64,
    pub gamma_i: Vec<f64>,
    pub gamma_phi: Vec<f64>,
    pub n_max: usize,
}

impl DeviceParams {
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        omega_r: f64,
        omega_q: f64,
        g: f64,
        kappa: f64,
        gamma_i: f64,
        gamma_phi: f64,
        n_max: usize,
        n_qubits: usize,
    ) -> Self {
        Self {
            omega_r,
            omega_q: vec![omega_q; n_qubits],
            g: vec![g; n_qubits],
            kappa,
            gamma_i: vec![gamma_i; n_qubits],
            gamma_phi: vec![gamma_phi; n_qubits],
            n_max,
        }
    }

    /// The two-qubit sample: ω_r/2π = 6.937 GHz, ω_q/2π = 6.647 GHz,
    /// g/2π = 116 MHz, κ/2π = 3.01 MHz, intrinsic T1 = 1.37 μs and pure
    /// dephasing time 880 ns, truncated at three photons.
    pub fn reference_sample() -> Self {
        Self::uniform(
            ghz_to_rad_per_ns(6.937),
            ghz_to_rad_per_ns(6.647),
            mhz_to_rad_per_ns(116.0),
            mhz_to_rad_per_ns(3.01),
            rate_from_lifetime_ns(1370.0),
            rate_from_lifetime_ns(880.0),
            3,
            2,
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.omega_q.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if n < 1 {
            return Err(Error::InvalidParameter("at least one qubit is required".into()));
        }
        if [self.g.len(), self.gamma_i.len(), self.gamma_phi.len()].iter().any(|&l| l != n) {
            return Err(Error::InvalidParameter("per-qubit parameter lists differ in length".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidTruncation(self.n_max, 2));
        }
        let positive = std::iter::once(self.omega_r).chain(self.omega_q.iter().copied());
        if positive.clone().any(|f| !(f.is_finite() && f > 0.0)) {
            return Err(Error::InvalidParameter("frequencies must be finite and positive".into()));
        }
        let rates = std::iter::once(self.kappa)
            .chain(self.gamma_i.iter().copied())
            .chain(self.gamma_phi.iter().copied());
        if rates.clone().any(|r| !(r.is_finite() && r >= 0.0)) {
            return Err(Error::InvalidParameter("rates must be finite and non-negative".into()));
        }
        if self.g.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<SpaceLayout> {
        self.validate()?;
        SpaceLayout::cavity_qubits(self.n_max, self.n_qubits())
    }

    /// max |ω_q[i] − ω_q[j]|.
    pub fn resonance_spread(&self) -> f64 {
        let lo = self.omega_q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.omega_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Δ = ω_q − ω_r of the first qubit.
    pub fn detuning(&self) -> f64 {
        self.omega_q[0] - self.omega_r
    }

    /// Copy with every qubit placed at ω_r + Δ.
    pub fn with_detuning(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.omega_q.iter_mut().for_each(|w| *w = self.omega_r + delta);
        out
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..self.clone() }
    }

    fn check_layout(&self, layout: &SpaceLayout) -> Result<()> {
        self.validate()?;
        if layout.n_qubits() != self.n_qubits() || layout.n_max() != self.n_max {
            return Err(Error::Layout(format!(
                "layout {:?} does not match device (n_max = {}, {} qubits)",
                layout.dims(),
                self.n_max,
                self.n_qubits()
            )));
        }
        Ok(())
    }
}

/// Local drive with strength ε, amplitude imbalance ξ and relative phase φ
/// on the second qubit, at drive frequency ω_d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub epsilon: f64,
    pub xi: f64,
    phi: f64,
    pub omega_d: f64,
}

impl DriveParams {
    pub fn new(epsilon: f64, xi: f64, phi: f64, omega_d: f64) -> Result<Self> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::InvalidParameter(format!("imbalance xi must be >= 0, got {xi}")));
        }
        if !epsilon.is_finite() || !phi.is_finite() || !omega_d.is_finite() {
            return Err(Error::InvalidParameter("drive parameters must be finite".into()));
        }
        Ok(Self { epsilon, xi, phi: phi.rem_euclid(TAU), omega_d })
    }

    /// Relative phase, always in [0, 2π).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi: phi.rem_euclid(TAU), ..*self }
    }
}

/// a on the cavity factor of `layout`.
pub fn cavity_annihilation(layout: &SpaceLayout) -> Result<Operator> {
    embed(&annihilation(layout.n_max())?, layout, 0)
}

/// Pauli operator on qubit `qubit` (0-based) of `layout`.
pub fn qubit_op(kind: Pauli, layout: &SpaceLayout, qubit: usize) -> Result<Operator> {
    embed(&pauli(kind), layout, qubit + 1)
}

/// N_exc = a†a + Σ_i |e⟩⟨e|_i
pub fn excitation_number(layout: &SpaceLayout) -> Operator {
    Operator::diagonal(layout, |k| layout.excitations(k) as f64)
}

/// Projector onto the subspace with exactly `n` excitations.
pub fn manifold_projector(layout: &SpaceLayout, n: usize) -> Operator {
    Operator::diagonal(layout, |k| if layout.excitations(k) == n { 1.0 } else { 0.0 })
}

/// |0; g…g⟩
pub fn ground_state(layout: &SpaceLayout) -> StateVector {
    StateVector::basis(layout, 0)
}

/// H/ħ = ω_r a†a + Σ_i (ω_q[i]/2) σ_z⁽ⁱ⁾ + Σ_i g[i] (a σ_+⁽ⁱ⁾ + a† σ_−⁽ⁱ⁾)
pub fn build_htc(layout: &SpaceLayout, params: &DeviceParams) -> Result<Operator> {
    params.check_layout(layout)?;
    let a = cavity_annihilation(layout)?;
    let ad = a.dagger();
    let mut h = (&ad * &a).scale(params.omega_r);
    for i in 0..params.n_qubits() {
        let sz = qubit_op(Pauli::Z, layout, i)?;
        let sp = qubit_op(Pauli::Plus, layout, i)?;
        let sm = qubit_op(Pauli::Minus, layout, i)?;
        h = &h + &sz.scale(params.omega_q[i] / 2.0);
        let exchange = &(&a * &sp) + &(&ad * &sm);
        h = &h + &exchange.scale(params.g[i]);
    }
    Ok(h)
}

/// Collective spin operators J_z = ½Σσ_z⁽ⁱ⁾, J_± = Σσ_±⁽ⁱ⁾.
#[derive(Clone, Debug)]
pub struct CollectiveOps {
    pub jz: Operator,
    pub jplus: Operator,
    pub jminus: Operator,
}

pub fn collective_ops(layout: &SpaceLayout) -> Result<CollectiveOps> {
    let mut jz = Operator::zeros(layout);
    let mut jplus = Operator::zeros(layout);
    let mut jminus = Operator::zeros(layout);
    for i in 0..layout.n_qubits() {
        jz = &jz + &qubit_op(Pauli::Z, layout, i)?.scale(0.5);
        jplus = &jplus + &qubit_op(Pauli::Plus, layout, i)?;
        jminus = &jminus + &qubit_op(Pauli::Minus, layout, i)?;
    }
    Ok(CollectiveOps { jz, jplus, jminus })
}

/// Which collective single-excitation state a drive leaves dark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DarkState {
    /// ψ_s, built on the symmetric qubit state ψ_+.
    Symmetric,
    /// ψ_a = |0; ψ_−⟩
    Antisymmetric,
}

/// Closed-form single-excitation eigenstates of two resonant qubits:
///
/// ψ_a = |0;ψ_−⟩
/// ψ_r = cos θ_m |1;gg⟩ + sin θ_m |0;ψ_+⟩
/// ψ_s = sin θ_m |1;gg⟩ − cos θ_m |0;ψ_+⟩
///
/// with ψ_± = (|ge⟩ ± |eg⟩)/√2 and cos 2θ_m = −Δ/√(8g² + Δ²). Frequencies
/// are transition frequencies from |0;gg⟩.
#[derive(Clone, Debug)]
pub struct DressedStates {
    pub theta_m: f64,
    pub psi_a: StateVector,
    pub psi_s: StateVector,
    pub psi_r: StateVector,
    pub ground: StateVector,
    pub omega_a: f64,
    pub omega_s: f64,
    pub omega_r_dressed: f64,
    /// g²/Δ; `None` at exact resonance where it is undefined.
    pub j_coupling: Option<f64>,
}

impl DressedStates {
    pub fn state(&self, which: DarkState) -> &StateVector {
        match which {
            DarkState::Symmetric => &self.psi_s,
            DarkState::Antisymmetric => &self.psi_a,
        }
    }
}

/// Mixing angle θ_m ∈ (0, π/2), continuous in Δ, tan 2θ_m = 2√2 g / (−Δ).
pub fn mixing_angle(g: f64, delta: f64) -> f64 {
    0.5 * (2.0 * SQRT_2 * g).atan2(-delta)
}

pub fn dressed_single_excitation(params: &DeviceParams) -> Result<DressedStates> {
    let layout = params.layout()?;
    if params.n_qubits() != 2 {
        return Err(Error::InvalidParameter(format!(
            "dressed states are defined for two qubits, got {}",
            params.n_qubits()
        )));
    }
    let spread = params.resonance_spread();
    if spread >= RESONANCE_TOL {
        return Err(Error::NotResonant(spread));
    }
    let (g1, g2) = (params.g[0], params.g[1]);
    let g = 0.5 * (g1 + g2);
    let rel = if g == 0.0 { (g1 - g2).abs() } else { ((g1 - g2) / g).abs() };
    if rel > COUPLING_REL_TOL {
        return Err(Error::UnequalCouplings(rel));
    }

    let omega_q = params.omega_q[0];
    let delta = omega_q - params.omega_r;
    let theta = mixing_angle(g, delta);
    let (s, c) = theta.sin_cos();

    let ket = |n: usize, q: [bool; 2]| StateVector::fock(&layout, n, &q);
    let one_gg = ket(1, [false, false])?;
    let ge = ket(0, [false, true])?;
    let eg = ket(0, [true, false])?;
    let h = C64::from(FRAC_1_SQRT_2);
    let psi_plus = StateVector::superposition(&layout, &[(h, &ge), (h, &eg)]);
    let psi_minus = StateVector::superposition(&layout, &[(h, &ge), (-h, &eg)]);

    let psi_r = StateVector::superposition(&layout, &[(C64::from(c), &one_gg), (C64::from(s), &psi_plus)]);
    let psi_s = StateVector::superposition(&layout, &[(C64::from(s), &one_gg), (C64::from(-c), &psi_plus)]);

    let mean = 0.5 * (params.omega_r + omega_q);
    let half_split = 0.5 * (delta * delta + 8.0 * g * g).sqrt();

    Ok(DressedStates {
        theta_m: theta,
        psi_a: psi_minus,
        psi_s,
        psi_r,
        ground: ground_state(&layout),
        omega_a: omega_q,
        omega_s: mean - half_split,
        omega_r_dressed: mean + half_split,
        j_coupling: j_coupling(g, delta).ok(),
    })
}

/// H_d/ħ = ε(σ_+⁽¹⁾ + ξ e^{iφ} σ_+⁽²⁾) + h.c. in the frame of the drive.
pub fn drive_hamiltonian(layout: &SpaceLayout, drive: &DriveParams) -> Result<Operator> {
    if layout.n_qubits() != 2 {
        return Err(Error::UnsupportedDrive(layout.n_qubits()));
    }
    let sp1 = qubit_op(Pauli::Plus, layout, 0)?;
    let sp2 = qubit_op(Pauli::Plus, layout, 1)?;
    let raise = &sp1 + &sp2.scale(C64::from_polar(drive.xi, drive.phi()));
    Ok((&raise + &raise.dagger()).scale(drive.epsilon))
}

/// Ω(ψ) = |⟨ground|H_d|target⟩|/ħ.
pub fn transition_matrix_element(
    drive: &DriveParams,
    target: &StateVector,
    ground: &StateVector,
) -> Result<f64> {
    for s in [target, ground] {
        if !s.is_normalized(NORM_TOL) {
            return Err(Error::Unnormalized(s.norm()));
        }
    }
    let hd = drive_hamiltonian(target.layout(), drive)?;
    Ok(hd.matrix_element(ground, target).norm())
}

/// The dressed state whose transition matrix element is below 1e−10·ε.
pub fn dark_state_condition(drive: &DriveParams, dressed: &DressedStates) -> Result<Option<DarkState>> {
    let threshold = 1e-10 * drive.epsilon.abs();
    let mut dark = None;
    let mut best = f64::INFINITY;
    for which in [DarkState::Symmetric, DarkState::Antisymmetric] {
        let omega = transition_matrix_element(drive, dressed.state(which), &dressed.ground)?;
        if omega < threshold && omega < best {
            best = omega;
            dark = Some(which);
        }
    }
    Ok(dark)
}

/// γ_κ = κ |⟨ground|a|target⟩|².
pub fn purcell_rate(target: &StateVector, ground: &StateVector, kappa: f64) -> Result<f64> {
    let a = cavity_annihilation(target.layout())?;
    Ok(kappa * a.matrix_element(ground, target).norm_sqr())
}

/// J = g²/Δ (signed).
pub fn j_coupling(g: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::JUndefined);
    }
    Ok(g * g / delta)
}

/// H − ω_frame N_exc: the Hamiltonian seen in a frame rotating at ω_frame.
pub fn rotating_frame(h: &Operator, omega_frame: f64) -> Operator {
    if omega_frame == 0.0 {
        return h.clone();
    }
    h - &excitation_number(h.layout()).scale(omega_frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{hermitian_eig, ONE};
    use crate::units::mhz_to_rad_per_ns;
    use std::f64::consts::PI;

    fn device(g_mhz: f64, delta_mhz: f64) -> DeviceParams {
        let mut d = DeviceParams::reference_sample().with_detuning(mhz_to_rad_per_ns(delta_mhz));
        d.g = vec![mhz_to_rad_per_ns(g_mhz); 2];
        d
    }

    fn overlap(a: &StateVector, b: &StateVector) -> f64 {
        a.inner(b).norm()
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_excitations() {
        let d = DeviceParams::reference_sample();
        let l = d.layout().unwrap();
        let h = build_htc(&l, &d).unwrap();
        assert!(h.is_hermitian(1e-12));
        assert!(h.commutator(&excitation_number(&l)).max_abs() < 1e-12);
    }

    #[test]
    fn uncoupled_spectrum_is_bare() {
        let mut d = DeviceParams::reference_sample();
        d.g = vec![0.0; 2];
        let l = d.layout().unwrap();
        let eig = hermitian_eig(&build_htc(&l, &d).unwrap()).unwrap();
        let offset = -d.omega_q[0];
        let mut bare: Vec<f64> = (0..l.total_dim())
            .map(|k| {
                let f = l.decompose(k);
                offset + f[0] as f64 * d.omega_r + (f[1] + f[2]) as f64 * d.omega_q[0]
            })
            .collect();
        bare.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&bare) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_single_excitation_splitting() {
        let d = device(116.0, 0.0);
        let l = d.layout().unwrap();
        let h = build_htc(&l, &d).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        let ground = -d.omega_q[0];
        let g = d.g[0];
        let mut one: Vec<f64> = eig
            .values
            .iter()
            .enumerate()
            .filter(|&(k, _)| {
                let v = eig.vector(&l, k);
                (excitation_number(&l).expectation(&v).re - 1.0).abs() < 1e-9
            })
            .map(|(_, &e)| e - ground)
            .collect();
        one.sort_by(f64::total_cmp);
        assert_eq!(one.len(), 3);
        assert!((one[0] - (d.omega_r - SQRT_2 * g)).abs() < 1e-10);
        assert!((one[1] - d.omega_q[0]).abs() < 1e-10);
        assert!((one[2] - (d.omega_r + SQRT_2 * g)).abs() < 1e-10);
    }

    #[test]
    fn collective_operator_relations() {
        let l = SpaceLayout::cavity_qubits(2, 2).unwrap();
        let j = collective_ops(&l).unwrap();
        assert!((&j.jz.commutator(&j.jplus) - &j.jplus).max_abs() < 1e-12);
        assert!((&j.jz.commutator(&j.jminus) + &j.jminus).max_abs() < 1e-12);

        let gg = StateVector::fock(&l, 0, &[false, false]).unwrap();
        let ge = StateVector::fock(&l, 0, &[false, true]).unwrap();
        let eg = StateVector::fock(&l, 0, &[true, false]).unwrap();
        let raised = j.jplus.apply(&gg);
        let expect = StateVector::superposition(&l, &[(ONE, &ge), (ONE, &eg)]);
        assert!((raised.amplitudes() - expect.amplitudes()).norm() < 1e-15);

        let h = C64::from(FRAC_1_SQRT_2);
        let minus = StateVector::superposition(&l, &[(h, &ge), (-h, &eg)]);
        assert!(j.jplus.apply(&minus).norm() < 1e-15);
        assert!((j.jz.apply(&gg).amplitudes() + gg.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn dressed_states_match_numeric_diagonalization() {
        let g_mhz = 116.0;
        for delta_mhz in [-2000.0, -500.0, -290.0, -232.0, -100.0, 0.0, 150.0, 232.0, 800.0] {
            let d = device(g_mhz, delta_mhz);
            let dressed = dressed_single_excitation(&d).unwrap();
            let l = d.layout().unwrap();
            let h = build_htc(&l, &d).unwrap();
            let eig = hermitian_eig(&h).unwrap();
            let ground_e = -d.omega_q[0];
            for (state, freq) in [
                (&dressed.psi_a, dressed.omega_a),
                (&dressed.psi_s, dressed.omega_s),
                (&dressed.psi_r, dressed.omega_r_dressed),
            ] {
                let (k, ov) = (0..l.total_dim())
                    .map(|k| (k, overlap(&eig.vector(&l, k), state)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(ov > 1.0 - 1e-6, "delta {delta_mhz}: overlap {ov}");
                assert!((eig.values[k] - ground_e - freq).abs() < 1e-9);
            }
            let states = [&dressed.psi_a, &dressed.psi_s, &dressed.psi_r];
            for (i, a) in states.iter().enumerate() {
                for (j, b) in states.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((a.inner(b).norm() - expect).abs() < 1e-10);
                }
            }
            // ψ_a carries no photons.
            for (k, amp) in dressed.psi_a.amplitudes().iter().enumerate() {
                if l.decompose(k)[0] > 0 {
                    assert!(amp.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixing_angle_limits() {
        let g = 1.0;
        let at_resonance = mixing_angle(g, 0.0);
        assert!(((2.0 * at_resonance).cos()).abs() < 1e-15);
        for delta in [-100.0, -3.0, 0.5, 40.0] {
            let theta = mixing_angle(g, delta);
            let expect = -delta / (8.0 * g * g + delta * delta).sqrt();
            assert!(((2.0 * theta).cos() - expect).abs() < 1e-14);
            assert!(theta > 0.0 && theta < PI / 2.0);
        }
    }

    #[test]
    fn far_detuned_bright_state_is_qubit_like() {
        let g = mhz_to_rad_per_ns(116.0);
        let d = device(116.0, -116.0 * 50.0);
        let dressed = dressed_single_excitation(&d).unwrap();
        let l = d.layout().unwrap();
        let one_gg = StateVector::fock(&l, 1, &[false, false]).unwrap();
        let photonic = dressed.psi_s.inner(&one_gg).norm();
        let estimate = SQRT_2 * g / (50.0 * g);
        assert!((photonic - estimate).abs() / estimate < 2e-3);
    }

    #[test]
    fn resonant_states_are_equal_mixtures() {
        let d = device(116.0, 0.0);
        let dressed = dressed_single_excitation(&d).unwrap();
        let l = d.layout().unwrap();
        let one_gg = StateVector::fock(&l, 1, &[false, false]).unwrap();
        for s in [&dressed.psi_s, &dressed.psi_r] {
            assert!((s.inner(&one_gg).norm_sqr() - 0.5).abs() < 1e-14);
        }
        assert!(dressed.j_coupling.is_none());
    }

    #[test]
    fn dressed_frequencies_at_sample_detuning() {
        let d = DeviceParams::reference_sample();
        let dressed = dressed_single_excitation(&d).unwrap();
        assert_eq!(dressed.omega_a, d.omega_q[0]);
        let j = dressed.j_coupling.unwrap();
        assert!(j < 0.0);
        assert!(dressed.omega_s < dressed.omega_a);
        // Exact splitting from the 2x2 block versus the dispersive 2|J|.
        let split_mhz = crate::units::rad_per_ns_to_mhz(dressed.omega_a - dressed.omega_s);
        let expect = 0.5 * (-290.0 + (290.0f64.powi(2) + 8.0 * 116.0f64.powi(2)).sqrt());
        assert!((split_mhz - expect).abs() < 1e-9);
        assert!((split_mhz - 73.945).abs() < 1e-3);
        assert!((crate::units::rad_per_ns_to_mhz(2.0 * j) + 92.8).abs() < 1e-9);
    }

    #[test]
    fn dressed_preconditions() {
        let mut d = DeviceParams::reference_sample();
        d.omega_q[1] += 1e-6;
        assert!(matches!(dressed_single_excitation(&d), Err(Error::NotResonant(_))));
        let mut d = DeviceParams::reference_sample();
        d.g[1] *= 1.0 + 1e-4;
        assert!(matches!(dressed_single_excitation(&d), Err(Error::UnequalCouplings(_))));
    }

    fn far_dispersive() -> DressedStates {
        dressed_single_excitation(&device(116.0, -50.0 * 116.0)).unwrap()
    }

    #[test]
    fn selection_rules_at_symmetric_and_antisymmetric_drive() {
        let dressed = far_dispersive();
        let eps = 0.01;
        let om = |phi: f64, which| {
            let drive = DriveParams::new(eps, 1.0, phi, 0.0).unwrap();
            transition_matrix_element(&drive, dressed.state(which), &dressed.ground).unwrap()
        };
        assert!(om(0.0, DarkState::Antisymmetric) < 1e-10 * eps);
        assert!(om(PI, DarkState::Symmetric) < 1e-10 * eps);
        assert!((om(PI, DarkState::Antisymmetric) - SQRT_2 * eps).abs() < 1e-15);
        let cos = dressed.theta_m.cos();
        assert!((om(0.0, DarkState::Symmetric) - SQRT_2 * eps * cos).abs() < 1e-15);
        assert!((om(0.0, DarkState::Symmetric) / (SQRT_2 * eps) - 1.0).abs() < 1e-3);
        assert!((om(PI / 2.0, DarkState::Antisymmetric) - eps).abs() < 1e-15);
        assert!((om(PI / 2.0, DarkState::Symmetric) / eps - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dark_state_labels() {
        let dressed = far_dispersive();
        let check = |xi, phi| dark_state_condition(&DriveParams::new(0.02, xi, phi, 0.0).unwrap(), &dressed).unwrap();
        assert_eq!(check(1.0, 0.0), Some(DarkState::Antisymmetric));
        assert_eq!(check(1.0, PI), Some(DarkState::Symmetric));
        assert_eq!(check(0.5, 0.0), None);
    }

    #[test]
    fn drive_hamiltonian_cases() {
        let l = SpaceLayout::cavity_qubits(2, 2).unwrap();
        let eps = 0.3;
        let hd = drive_hamiltonian(&l, &DriveParams::new(eps, 1.0, 0.0, 0.0).unwrap()).unwrap();
        let j = collective_ops(&l).unwrap();
        let jx2 = (&j.jplus + &j.jminus).scale(eps);
        assert!((&hd - &jx2).max_abs() < 1e-15);
        assert!(hd.is_hermitian(1e-15));

        let zero = drive_hamiltonian(&l, &DriveParams::new(0.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let single = drive_hamiltonian(&l, &DriveParams::new(eps, 0.0, 1.0, 0.0).unwrap()).unwrap();
        let x1 = qubit_op(Pauli::X, &l, 0).unwrap().scale(eps);
        assert!((&single - &x1).max_abs() < 1e-15);

        let l3 = SpaceLayout::cavity_qubits(2, 3).unwrap();
        assert!(matches!(
            drive_hamiltonian(&l3, &DriveParams::new(eps, 1.0, 0.0, 0.0).unwrap()),
            Err(Error::UnsupportedDrive(3))
        ));
    }

    #[test]
    fn unnormalized_inputs_are_rejected() {
        let dressed = far_dispersive();
        let drive = DriveParams::new(0.1, 1.0, 0.0, 0.0).unwrap();
        let doubled = dressed.psi_s.scaled_for_test(2.0);
        assert!(matches!(
            transition_matrix_element(&drive, &doubled, &dressed.ground),
            Err(Error::Unnormalized(_))
        ));
    }

    impl StateVector {
        fn scaled_for_test(&self, c: f64) -> StateVector {
            StateVector::superposition(self.layout(), &[(C64::from(c), self)])
        }
    }

    #[test]
    fn purcell_rates() {
        let kappa = mhz_to_rad_per_ns(3.01);
        for delta_mhz in [-1000.0, -290.0, -50.0, 0.0, 300.0] {
            let dressed = dressed_single_excitation(&device(116.0, delta_mhz)).unwrap();
            assert_eq!(purcell_rate(&dressed.psi_a, &dressed.ground, kappa).unwrap(), 0.0);
            let exact = purcell_rate(&dressed.psi_s, &dressed.ground, kappa).unwrap();
            assert!((exact - kappa * dressed.theta_m.sin().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn bright_state_purcell_rate_versus_dispersive_estimate() {
        let kappa = mhz_to_rad_per_ns(3.01);
        let g = mhz_to_rad_per_ns(116.0);
        // Moderate detuning: exact sin²θ_m is well below 2(g/Δ)².
        let d = DeviceParams::reference_sample();
        let dressed = dressed_single_excitation(&d).unwrap();
        let exact = purcell_rate(&dressed.psi_s, &dressed.ground, kappa).unwrap();
        let delta = d.detuning();
        let dispersive = 2.0 * (g / delta).powi(2) * kappa;
        let ratio = exact / dispersive;
        assert!((ratio - 0.52771).abs() < 1e-4, "ratio {ratio}");
        // Converges to the dispersive estimate as |Δ|/g grows.
        let far = dressed_single_excitation(&device(116.0, -116.0 * 20.0)).unwrap();
        let exact_far = purcell_rate(&far.psi_s, &far.ground, kappa).unwrap();
        let disp_far = 2.0 * (1.0 / 20.0f64).powi(2) * kappa;
        assert!((exact_far / disp_far - 1.0).abs() < 0.02);
    }

    #[test]
    fn single_qubit_purcell_rate() {
        let g = mhz_to_rad_per_ns(116.0);
        let kappa = mhz_to_rad_per_ns(3.01);
        let delta = -20.0 * g;
        let d = DeviceParams::uniform(
            crate::units::ghz_to_rad_per_ns(6.937),
            crate::units::ghz_to_rad_per_ns(6.937) + delta,
            g,
            kappa,
            0.0,
            0.0,
            3,
            1,
        );
        d.validate().unwrap();
        let l = d.layout().unwrap();
        let eig = hermitian_eig(&build_htc(&l, &d).unwrap()).unwrap();
        let e = StateVector::fock(&l, 0, &[true]).unwrap();
        let k = (0..l.total_dim())
            .max_by(|&a, &b| overlap(&eig.vector(&l, a), &e).total_cmp(&overlap(&eig.vector(&l, b), &e)))
            .unwrap();
        let rate = purcell_rate(&eig.vector(&l, k), &ground_state(&l), kappa).unwrap();
        let estimate = (g / delta).powi(2) * kappa;
        assert!((rate / estimate - 1.0).abs() < 0.01, "rate {rate} estimate {estimate}");
    }

    #[test]
    fn j_coupling_values() {
        let g = mhz_to_rad_per_ns(116.0);
        let delta = mhz_to_rad_per_ns(-290.0);
        let j = j_coupling(g, delta).unwrap();
        assert!((crate::units::rad_per_ns_to_mhz(j) + 46.4).abs() < 1e-9);
        assert_eq!(j_coupling(0.0, delta).unwrap(), 0.0);
        assert!(j_coupling(g, 1.0).unwrap() > 0.0 && j_coupling(g, -1.0).unwrap() < 0.0);
        assert_eq!(j_coupling(g, 0.0), Err(Error::JUndefined));
    }

    #[test]
    fn rotating_frame_shifts_per_excitation() {
        let d = DeviceParams::reference_sample();
        let l = d.layout().unwrap();
        let h = build_htc(&l, &d).unwrap();
        assert_eq!(rotating_frame(&h, 0.0), h);
        let w = crate::units::ghz_to_rad_per_ns(6.6);
        let hf = rotating_frame(&h, w);
        let dressed = dressed_single_excitation(&d).unwrap();
        let ground_e = hf.expectation(&dressed.ground).re;
        for (s, f) in [(&dressed.psi_a, dressed.omega_a), (&dressed.psi_s, dressed.omega_s)] {
            let image = hf.apply(s);
            let e = s.inner(&image).re;
            assert!((image.amplitudes() - s.amplitudes() * C64::from(e)).norm() < 1e-9);
            assert!((e - ground_e - (f - w)).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn selection_rule_duality(xi in 0.0f64..2.0, phi in 0.0f64..TAU) {
            let dressed = far_dispersive();
            let eps = 0.05;
            let drive = DriveParams::new(eps, xi, phi, 0.0).unwrap();
            let s = transition_matrix_element(&drive, &dressed.psi_s, &dressed.ground).unwrap();
            let a = transition_matrix_element(&drive, &dressed.psi_a, &dressed.ground).unwrap();
            let total = eps * eps * (1.0 + xi * xi);
            proptest::prop_assert!(((s * s + a * a) - total).abs() <= 1e-3 * total);
        }
    }
}
