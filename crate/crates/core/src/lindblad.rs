//! Lindblad master equation: density matrices, collapse operators, time
//! evolution and steady states.
//!
//! dρ/dt = −i[H, ρ] + Σ_k r_k (c_k ρ c_k† − ½{c_k† c_k, ρ})
//!
//! where each collapse channel carries its rate `r_k` separately from the
//! bare operator `c_k`.
//!
//! Generators act on the real coordinates of Hermitian matrices in the
//! orthonormal basis {E_ii, (E_ij + E_ji)/√2, i(E_ij − E_ji)/√2}, so every
//! superoperator here is a real d²×d² matrix.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, FullPivLU};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{cavity_annihilation, qubit_op, DeviceParams};
use crate::operator::{hermitian_eig_matrix, max_abs, CMatrix, Operator, Pauli, SpaceLayout, StateVector, I};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const STEADY_STATE_RESIDUAL_TOL: f64 = 1e-10;
/// Relative pivot size below which the constrained steady-state system is
/// treated as singular.
const PIVOT_RATIO_TOL: f64 = 1e-12;

/// System state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let op = Operator::new(layout, matrix)?;
        let (layout, matrix) = (op.layout().clone(), op.into_matrix());
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:.3e})")));
        }
        let rho = Self { layout, matrix };
        let trace = rho.trace();
        if (trace - 1.0).abs() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// |ψ⟩⟨ψ| for a normalized ψ.
    pub fn pure(state: &StateVector) -> Result<Self> {
        if !state.is_normalized(TRACE_TOL) {
            return Err(Error::Unnormalized(state.norm()));
        }
        Self::new(state.layout().clone(), state.projector().into_matrix())
    }

    /// Convex combination Σ w_k ρ_k.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidState("empty mixture".into()))?.1;
        let mut m = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in terms {
            m += &rho.matrix * C64::from(*w);
        }
        Self::new(first.layout.clone(), m)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig_matrix(&hermitize(&self.matrix))
            .map(|e| e.values[0])
            .unwrap_or(f64::NAN)
    }

    /// tr(ρA)
    pub fn expectation(&self, op: &Operator) -> C64 {
        (&self.matrix * op.matrix()).trace()
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn population(&self, state: &StateVector) -> f64 {
        state.amplitudes().dotc(&(&self.matrix * state.amplitudes())).re
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// One dissipation channel: bare operator c and rate r, giving the
/// dissipator r·D[c].
#[derive(Clone, Debug)]
pub struct Collapse {
    pub label: String,
    pub operator: Operator,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct CollapseSet {
    layout: SpaceLayout,
    channels: Vec<Collapse>,
}

impl CollapseSet {
    pub fn new(layout: &SpaceLayout) -> Self {
        Self { layout: layout.clone(), channels: Vec::new() }
    }

    pub fn push(&mut self, label: impl Into<String>, operator: Operator, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("collapse rate must be >= 0, got {rate}")));
        }
        if operator.layout() != &self.layout {
            return Err(Error::Layout("collapse operator layout differs from the set".into()));
        }
        self.channels.push(Collapse { label: label.into(), operator, rate });
        Ok(())
    }

    /// Cavity decay √κ·a, intrinsic relaxation √γ_i·σ_−⁽ⁱ⁾ and local pure
    /// dephasing √(γ_φ/2)·σ_z⁽ⁱ⁾, the latter decaying qubit coherences at γ_φ.
    pub fn from_device(params: &DeviceParams, layout: &SpaceLayout) -> Result<Self> {
        params.validate()?;
        let mut set = Self::new(layout);
        set.push("kappa", cavity_annihilation(layout)?, params.kappa)?;
        for i in 0..params.n_qubits() {
            set.push(format!("gamma_i[{i}]"), qubit_op(Pauli::Minus, layout, i)?, params.gamma_i[i])?;
            set.push(format!("gamma_phi[{i}]"), qubit_op(Pauli::Z, layout, i)?, params.gamma_phi[i] / 2.0)?;
        }
        Ok(set)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn iter(&self) -> impl Iterator<Item = &Collapse> {
        self.channels.iter()
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn has_dissipation(&self) -> bool {
        self.channels.iter().any(|c| c.rate > 0.0)
    }

    /// Smallest strictly positive rate.
    pub fn min_positive_rate(&self) -> Option<f64> {
        self.channels.iter().map(|c| c.rate).filter(|&r| r > 0.0).min_by(f64::total_cmp)
    }

    fn active(&self) -> impl Iterator<Item = (f64, &CMatrix)> {
        self.channels.iter().filter(|c| c.rate > 0.0).map(|c| (c.rate, c.operator.matrix()))
    }
}

fn check_dims(layout: &SpaceLayout, h: &Operator, collapses: &CollapseSet) -> Result<()> {
    if h.layout() != layout || collapses.layout() != layout {
        return Err(Error::Layout("state, Hamiltonian and collapse operators disagree on layout".into()));
    }
    Ok(())
}

/// Effective non-Hermitian Hamiltonian K = H − (i/2) Σ r_k c_k†c_k.
fn effective_hamiltonian(h: &CMatrix, collapses: &CollapseSet) -> CMatrix {
    let mut k = h.clone();
    for (rate, c) in collapses.active() {
        k -= (c.adjoint() * c) * (I * (0.5 * rate));
    }
    k
}

/// dρ/dt = −iKρ + iρK† + Σ r c ρ c†, with K the effective Hamiltonian.
fn rhs_matrix(rho: &CMatrix, k: &CMatrix, collapses: &CollapseSet) -> CMatrix {
    let mut out = (k * rho) * (-I) + (rho * k.adjoint()) * I;
    for (rate, c) in collapses.active() {
        out += (c * rho * c.adjoint()) * C64::from(rate);
    }
    out
}

/// Right-hand side of the master equation at `rho`.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Operator, collapses: &CollapseSet) -> Result<CMatrix> {
    check_dims(rho.layout(), h, collapses)?;
    let k = effective_hamiltonian(h.matrix(), collapses);
    Ok(rhs_matrix(rho.matrix(), &k, collapses))
}

/// Number of real coordinates of a d×d Hermitian matrix.
fn coord_len(d: usize) -> usize {
    d * d
}

/// Real coordinates of a Hermitian matrix: diagonal first, then for each
/// pair i < j the √2·Re and √2·Im parts of entry (i, j).
pub fn hermitian_coords(m: &CMatrix) -> DVector<f64> {
    let d = m.nrows();
    let mut x = DVector::zeros(coord_len(d));
    for i in 0..d {
        x[i] = m[(i, i)].re;
    }
    let mut p = d;
    for i in 0..d {
        for j in (i + 1)..d {
            x[p] = SQRT_2 * m[(i, j)].re;
            x[p + 1] = SQRT_2 * m[(i, j)].im;
            p += 2;
        }
    }
    x
}

pub fn from_hermitian_coords(x: &DVector<f64>, d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::from(x[i]);
    }
    let mut p = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(x[p], x[p + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            p += 2;
        }
    }
    m
}

/// Master-equation generator as a real matrix on Hermitian coordinates.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    layout: SpaceLayout,
    generator: DMatrix<f64>,
}

impl Liouvillian {
    pub fn new(h: &Operator, collapses: &CollapseSet) -> Result<Self> {
        check_dims(h.layout(), h, collapses)?;
        if !h.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian(h.hermiticity_error()));
        }
        let k = effective_hamiltonian(h.matrix(), collapses);
        Ok(Self::assemble(h.layout(), &k, collapses))
    }

    /// Coherent part −i[H, ·] only.
    pub fn coherent(h: &Operator) -> Result<Self> {
        Self::new(h, &CollapseSet::new(h.layout()))
    }

    fn assemble(layout: &SpaceLayout, k: &CMatrix, collapses: &CollapseSet) -> Self {
        let d = k.nrows();
        let jumps: Vec<(f64, &CMatrix)> = collapses.active().collect();
        // Response to the matrix unit E_ij.
        let unit = |i: usize, j: usize| -> CMatrix {
            let mut m = CMatrix::zeros(d, d);
            for a in 0..d {
                m[(a, j)] += -I * k[(a, i)];
                m[(i, a)] += I * k[(a, j)].conj();
            }
            for (rate, c) in &jumps {
                for a in 0..d {
                    let ca = c[(a, i)];
                    if ca == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for b in 0..d {
                        m[(a, b)] += ca * c[(b, j)].conj() * *rate;
                    }
                }
            }
            m
        };
        let n = coord_len(d);
        let mut generator = DMatrix::zeros(n, n);
        for i in 0..d {
            generator.set_column(i, &hermitian_coords(&unit(i, i)));
        }
        let mut p = d;
        let s = C64::from(1.0 / SQRT_2);
        for i in 0..d {
            for j in (i + 1)..d {
                let (uij, uji) = (unit(i, j), unit(j, i));
                generator.set_column(p, &hermitian_coords(&((&uij + &uji) * s)));
                generator.set_column(p + 1, &hermitian_coords(&((&uij - &uji) * (I * s))));
                p += 2;
            }
        }
        Self { layout: layout.clone(), generator }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// self + c·other
    pub fn scaled_add(&self, other: &Liouvillian, c: f64) -> Self {
        assert_eq!(self.layout, other.layout, "Liouvillian layouts differ");
        Self { layout: self.layout.clone(), generator: &self.generator + &other.generator * c }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        from_hermitian_coords(&(&self.generator * hermitian_coords(rho)), self.dim())
    }

    /// One classical RK4 step of size h for the linear system ẋ = Gx, which
    /// is exactly the map I + hG + (hG)²/2 + (hG)³/6 + (hG)⁴/24.
    fn rk4_map(&self, h: f64) -> DMatrix<f64> {
        let n = self.generator.nrows();
        let hg = &self.generator * h;
        let id = DMatrix::<f64>::identity(n, n);
        let mut acc = &id + &hg * 0.25;
        acc = &id + (&hg * &acc) * (1.0 / 3.0);
        acc = &id + (&hg * &acc) * 0.5;
        &id + &hg * &acc
    }
}

fn matrix_power(base: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let n = base.nrows();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut b = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &b;
        }
        exp >>= 1;
        if exp > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Integration settings. The step is the largest h ≤ min(fraction/W, max_step)
/// that divides each sampling interval, where W is the spectral width of H,
/// then divided by `refine`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub step_fraction: f64,
    pub max_step: f64,
    /// Extra subdivision factor; 2 halves the step for convergence checks.
    pub refine: usize,
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { step_fraction: 0.1, max_step: 1.0, refine: 1, check_positivity: true }
    }
}

/// Largest admissible step for `h` before the per-interval rounding.
pub fn max_step(h: &Operator, opts: &EvolveOptions) -> Result<f64> {
    let eig = hermitian_eig_matrix(h.matrix())?;
    let width = eig.values.last().unwrap() - eig.values[0];
    let base = if width > 0.0 { (opts.step_fraction / width).min(opts.max_step) } else { opts.max_step };
    Ok(base / opts.refine.max(1) as f64)
}

fn substeps(dt: f64, h_max: f64) -> usize {
    ((dt / h_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Sampled solution of the master equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: BTreeMap<String, Vec<f64>>,
    /// Largest integrator step actually used (ns).
    pub step: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn add_observable(&mut self, name: impl Into<String>, projector: &Operator) -> Result<()> {
        let series = observable_series(self, projector)?;
        self.observables.insert(name.into(), series);
        Ok(())
    }
}

/// tr(ρ(t)·P) for every sample, clipped to [−1e−8, 1 + 1e−8].
pub fn observable_series(traj: &Trajectory, projector: &Operator) -> Result<Vec<f64>> {
    if !projector.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(projector.hermiticity_error()));
    }
    traj.states
        .iter()
        .zip(&traj.times)
        .enumerate()
        .map(|(k, (rho, &t))| {
            let v = rho.expectation(projector);
            if v.im.abs() > HERMITIAN_TOL {
                return Err(Error::InvariantViolation {
                    step: k,
                    time: t,
                    detail: format!("expectation value has imaginary part {:.3e}", v.im),
                });
            }
            Ok(v.re.clamp(-POSITIVITY_TOL, 1.0 + POSITIVITY_TOL))
        })
        .collect()
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::TimeGrid("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::TimeGrid("non-finite time".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TimeGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Re-symmetrize and check the trace and positivity gates.
fn checked_state(
    layout: &SpaceLayout,
    m: CMatrix,
    step: usize,
    time: f64,
    check_positivity: bool,
) -> Result<DensityMatrix> {
    let m = hermitize(&m);
    let trace = m.trace().re;
    if (trace - 1.0).abs() >= TRACE_TOL {
        return Err(Error::InvariantViolation {
            step,
            time,
            detail: format!("trace error {:.3e}", trace - 1.0),
        });
    }
    let rho = DensityMatrix { layout: layout.clone(), matrix: m };
    if check_positivity {
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvariantViolation {
                step,
                time,
                detail: format!("negative eigenvalue {min:.3e}"),
            });
        }
    }
    Ok(rho)
}

/// Fixed-step RK4 evolution for a time-independent generator, applied
/// through precomputed interval propagators.
#[derive(Clone, Debug)]
pub struct Evolver {
    liouvillian: Liouvillian,
    h_max: f64,
    opts: EvolveOptions,
}

impl Evolver {
    pub fn new(h: &Operator, collapses: &CollapseSet, opts: EvolveOptions) -> Result<Self> {
        let liouvillian = Liouvillian::new(h, collapses)?;
        let h_max = max_step(h, &opts)?;
        Ok(Self { liouvillian, h_max, opts })
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    /// Upper bound on the step used for any interval.
    pub fn max_step(&self) -> f64 {
        self.h_max
    }

    pub fn run(&self, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Trajectory> {
        Ok(self.run_many(&[rho0], t_grid)?.pop().unwrap())
    }

    /// Evolve several initial states over one grid, sharing the propagators.
    pub fn run_many(&self, rho0s: &[&DensityMatrix], t_grid: &[f64]) -> Result<Vec<Trajectory>> {
        validate_grid(t_grid)?;
        for rho in rho0s {
            if rho.layout() != self.liouvillian.layout() {
                return Err(Error::Layout("initial state layout differs from the generator".into()));
            }
        }
        let d = self.liouvillian.dim();
        let mut cache: Vec<(u64, usize, f64, DMatrix<f64>)> = Vec::new();
        let mut props = Vec::with_capacity(t_grid.len().saturating_sub(1));
        for w in t_grid.windows(2) {
            let dt = w[1] - w[0];
            let key = dt.to_bits();
            if !cache.iter().any(|c| c.0 == key) {
                let n = substeps(dt, self.h_max);
                let h = dt / n as f64;
                cache.push((key, n, h, matrix_power(&self.liouvillian.rk4_map(h), n)));
            }
            props.push(cache.iter().position(|c| c.0 == key).unwrap());
        }
        let step = cache.iter().map(|c| c.2).fold(0.0, f64::max);
        let step = if cache.is_empty() { self.h_max } else { step };

        rho0s
            .iter()
            .map(|rho0| {
                let mut x = hermitian_coords(rho0.matrix());
                let mut states = vec![(*rho0).clone()];
                let mut steps = 0;
                for (k, &p) in props.iter().enumerate() {
                    let (_, n, _, ref m) = cache[p];
                    x = m * &x;
                    steps += n;
                    let rho = checked_state(
                        rho0.layout(),
                        from_hermitian_coords(&x, d),
                        steps,
                        t_grid[k + 1],
                        self.opts.check_positivity,
                    )?;
                    x = hermitian_coords(rho.matrix());
                    states.push(rho);
                }
                Ok(Trajectory {
                    times: t_grid.to_vec(),
                    states,
                    observables: BTreeMap::new(),
                    step,
                    steps,
                })
            })
            .collect()
    }
}

/// Evolve `rho0` under a time-independent H and dissipator, sampling at
/// `t_grid` (the first entry is the time of `rho0`).
pub fn evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    collapses: &CollapseSet,
    t_grid: &[f64],
) -> Result<Trajectory> {
    evolve_with(rho0, h, collapses, t_grid, EvolveOptions::default())
}

pub fn evolve_with(
    rho0: &DensityMatrix,
    h: &Operator,
    collapses: &CollapseSet,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    check_dims(rho0.layout(), h, collapses)?;
    Evolver::new(h, collapses, opts)?.run(rho0, t_grid)
}

/// Step-by-step RK4 on the density matrix itself, re-symmetrizing after
/// every step. Same step selection as [`evolve_with`]; slower, used as a
/// cross-check of the propagator path.
pub fn evolve_direct(
    rho0: &DensityMatrix,
    h: &Operator,
    collapses: &CollapseSet,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    check_dims(rho0.layout(), h, collapses)?;
    validate_grid(t_grid)?;
    let h_max = max_step(h, &opts)?;
    let k = effective_hamiltonian(h.matrix(), collapses);
    let f = |rho: &CMatrix| rhs_matrix(rho, &k, collapses);
    let mut rho = rho0.matrix().clone();
    let mut states = vec![rho0.clone()];
    let mut steps = 0;
    let mut step_used: f64 = 0.0;
    for (idx, w) in t_grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let n = substeps(dt, h_max);
        let hs = dt / n as f64;
        step_used = step_used.max(hs);
        for _ in 0..n {
            let k1 = f(&rho);
            let k2 = f(&(&rho + &k1 * C64::from(0.5 * hs)));
            let k3 = f(&(&rho + &k2 * C64::from(0.5 * hs)));
            let k4 = f(&(&rho + &k3 * C64::from(hs)));
            rho += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(hs / 6.0);
            rho = hermitize(&rho);
            steps += 1;
        }
        let state = checked_state(rho0.layout(), rho.clone(), steps, t_grid[idx + 1], opts.check_positivity)?;
        states.push(state);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        observables: BTreeMap::new(),
        step: if step_used > 0.0 { step_used } else { h_max },
        steps,
    })
}

/// Piece of a piecewise-constant Hamiltonian.
#[derive(Clone, Debug)]
pub struct Segment {
    pub hamiltonian: Operator,
    /// ns; the last segment extends to the end of the grid.
    pub duration: f64,
}

/// Evolution under a piecewise-constant Hamiltonian with a fixed dissipator.
/// Segment `k` starts at `t_grid[0] + Σ_{j<k} duration_j`.
pub fn evolve_piecewise(
    rho0: &DensityMatrix,
    segments: &[Segment],
    collapses: &CollapseSet,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    validate_grid(t_grid)?;
    if segments.is_empty() {
        return Err(Error::InvalidParameter("no Hamiltonian segments".into()));
    }
    let evolvers = segments
        .iter()
        .map(|s| Evolver::new(&s.hamiltonian, collapses, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut bounds = Vec::with_capacity(segments.len());
    let mut t_end = t_grid[0];
    for (k, s) in segments.iter().enumerate() {
        t_end = if k + 1 == segments.len() { f64::INFINITY } else { t_end + s.duration };
        bounds.push(t_end);
    }

    let mut rho = rho0.clone();
    let mut t = t_grid[0];
    let mut seg = 0;
    let mut states = vec![rho0.clone()];
    let mut steps = 0;
    let mut step: f64 = 0.0;
    for &target in &t_grid[1..] {
        while t < target {
            while bounds[seg] <= t {
                seg += 1;
            }
            let stop = target.min(bounds[seg]);
            let traj = evolvers[seg].run(&rho, &[t, stop])?;
            steps += traj.steps;
            step = step.max(traj.step);
            rho = traj.states.into_iter().last().unwrap();
            t = stop;
        }
        states.push(rho.clone());
    }
    Ok(Trajectory { times: t_grid.to_vec(), states, observables: BTreeMap::new(), step, steps })
}

/// Unique stationary state of a generator.
pub fn steady_state(h: &Operator, collapses: &CollapseSet) -> Result<DensityMatrix> {
    if !collapses.has_dissipation() {
        return Err(Error::NoDissipation);
    }
    steady_state_of(&Liouvillian::new(h, collapses)?)
}

/// Solves G x = 0 with the ρ_00 equation replaced by tr ρ = 1. That row is
/// minus the sum of the other diagonal rows, so the replacement keeps the
/// rank and the system is singular exactly when the null space of G has
/// dimension above one.
pub fn steady_state_of(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    let d = liouvillian.dim();
    let n = coord_len(d);
    let mut a = liouvillian.generator().clone();
    for c in 0..n {
        a[(0, c)] = if c < d { 1.0 } else { 0.0 };
    }
    let lu = FullPivLU::new(a);
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|k| u[(k, k)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio < PIVOT_RATIO_TOL {
        return Err(Error::NonUniqueSteadyState(ratio));
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let x = lu.solve(&b).ok_or(Error::NonUniqueSteadyState(ratio))?;
    let residual = (liouvillian.generator() * &x).amax();
    if residual >= STEADY_STATE_RESIDUAL_TOL {
        return Err(Error::SteadyStateResidual(residual));
    }
    DensityMatrix::new(liouvillian.layout().clone(), from_hermitian_coords(&x, d))
}
