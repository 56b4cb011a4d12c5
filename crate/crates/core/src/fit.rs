//! Damped nonlinear least squares (Levenberg-Marquardt) and the two model
//! fits used by the experiments: exponential decay and phase response.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::experiments::bloch::bloch_steady_state;

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_STEP_TOL: f64 = 1e-10;
pub const FD_RELATIVE_STEP: f64 = 1e-6;
/// Smallest eigenvalue ratio of the column-scaled normal matrix accepted as
/// full rank.
pub const RANK_TOL: f64 = 1e-10;
/// Decay over the sampled window below which an exponential fit reports a
/// non-decaying trace.
pub const NON_DECAYING_TOL: f64 = 1e-6;
/// Minimum φ span for a phase-response fit, as a fraction of 2π.
pub const PHASE_COVERAGE: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// ‖y − model‖₂ at the returned parameters.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Residual norm at the initial point and after every accepted step.
    pub residual_history: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.parameters[k])
    }

    pub fn error_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.standard_errors[k])
    }
}

/// Box constraints; infinite entries mean unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| v >= lo && v <= hi)
    }

    /// Components that would leave the box move halfway from `from` toward
    /// the violated bound instead.
    fn restrict(&self, from: &[f64], to: &mut [f64]) {
        for k in 0..to.len() {
            if to[k] < self.lower[k] {
                to[k] = 0.5 * (from[k] + self.lower[k]);
            } else if to[k] > self.upper[k] {
                to[k] = 0.5 * (from[k] + self.upper[k]);
            }
        }
    }
}

fn residuals<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64], y: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| yi - model(p, xi)))
}

/// Central-difference Jacobian of the model values, one column per
/// parameter. The step is relative to |p| with a floor of one unit, so
/// parameters that pass through zero keep a usable step.
fn jacobian<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64]) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(x.len(), p.len());
    let mut work = p.to_vec();
    for k in 0..p.len() {
        let h = FD_RELATIVE_STEP * p[k].abs().max(1.0);
        work[k] = p[k] + h;
        let plus: Vec<f64> = x.iter().map(|&xi| model(&work, xi)).collect();
        work[k] = p[k] - h;
        let minus: Vec<f64> = x.iter().map(|&xi| model(&work, xi)).collect();
        let span = (p[k] + h) - (p[k] - h);
        work[k] = p[k];
        for i in 0..x.len() {
            jac[(i, k)] = (plus[i] - minus[i]) / span;
        }
    }
    jac
}

/// Fails when the column-scaled normal matrix is numerically singular,
/// naming the null combination of parameters.
fn check_rank(normal: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let m = normal.nrows();
    for k in 0..m {
        if !(normal[(k, k)] > 0.0) {
            return Err(Error::RankDeficient(format!("model does not depend on {}", names[k])));
        }
    }
    let scale = DVector::from_iterator(m, (0..m).map(|k| 1.0 / normal[(k, k)].sqrt()));
    let scaled = DMatrix::from_fn(m, m, |i, j| normal[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled);
    let (kmin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let lmax = eig.eigenvalues.max();
    if lmin / lmax < RANK_TOL {
        let v = eig.eigenvectors.column(kmin);
        let terms: Vec<String> = (0..m)
            .filter(|&k| v[k].abs() > 0.1)
            .map(|k| format!("{:+.3}*{}", v[k] * scale[k], names[k]))
            .collect();
        return Err(Error::RankDeficient(format!(
            "{} (scaled eigenvalue ratio {:.3e})",
            terms.join(" "),
            lmin / lmax
        )));
    }
    Ok(())
}

/// Minimizes Σ (y_i − model(p, x_i))² by Levenberg-Marquardt with damping
/// λ·diag(JᵀJ). Returns the best point found; `converged` reports whether
/// the gradient condition holds there.
pub fn least_squares<F>(
    model: F,
    names: &[&str],
    x: &[f64],
    y: &[f64],
    p0: &[f64],
    bounds: &Bounds,
) -> Result<FitResult>
where
    F: Fn(&[f64], f64) -> f64,
{
    let m = p0.len();
    if names.len() != m || bounds.lower.len() != m || bounds.upper.len() != m {
        return Err(Error::FitInput("parameter names, bounds and initial values differ in length".into()));
    }
    if x.len() != y.len() {
        return Err(Error::FitInput(format!("{} abscissae but {} ordinates", x.len(), y.len())));
    }
    if x.len() < m + 1 {
        return Err(Error::FitInput(format!("{} points cannot determine {m} parameters", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::FitInput("data contain non-finite values".into()));
    }
    if !bounds.contains(p0) {
        return Err(Error::FitInput("initial parameters lie outside the bounds".into()));
    }
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();

    let mut p = p0.to_vec();
    let mut r = residuals(&model, &p, x, y);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::FitInput("model is not finite at the initial parameters".into()));
    }
    let mut history = vec![cost.sqrt()];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jac = jacobian(&model, &p, x);
        let normal = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = normal.clone();
            for k in 0..m {
                a[(k, k)] += lambda * normal[(k, k)].max(f64::MIN_POSITIVE);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            bounds.restrict(&p, &mut trial);
            let r_trial = residuals(&model, &trial, x, y);
            let c_trial = r_trial.norm_squared();
            if c_trial.is_finite() && c_trial < cost {
                lambda = (lambda / 10.0).max(1e-12);
                accepted = Some((trial, r_trial, c_trial));
                break;
            }
            lambda *= 10.0;
        }
        let Some((trial, r_trial, c_trial)) = accepted else {
            break;
        };
        let rel_change = trial
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        p = trial;
        r = r_trial;
        cost = c_trial;
        history.push(cost.sqrt());
        if rel_change < RELATIVE_STEP_TOL {
            break;
        }
    }

    let jac = jacobian(&model, &p, x);
    let normal = jac.transpose() * &jac;
    check_rank(&normal, &names)?;
    let residual_norm = cost.sqrt();
    let grad_norm = (jac.transpose() * &r).norm();
    let converged = grad_norm < 1e-8 * (1.0 + residual_norm);
    let dof = (x.len() - m) as f64;
    let variance = cost / dof;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("normal matrix is not invertible".into()))?;
    let standard_errors = (0..m).map(|k| (variance * cov[(k, k)]).max(0.0).sqrt()).collect();
    Ok(FitResult {
        names,
        parameters: p,
        standard_errors,
        residual_norm,
        converged,
        iterations,
        residual_history: history,
    })
}

/// A·exp(−t/T1) + c
pub fn exponential_model(p: &[f64], t: f64) -> f64 {
    p[0] * (-t / p[1]).exp() + p[2]
}

/// Fits A·exp(−t/T1) + c with T1 > 0. Returns T1 = ∞ (amplitude 0, offset
/// equal to the mean) when the data or the fitted curve change by less than
/// 1e−6 over the sampled window.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<FitResult> {
    if t.len() < 4 || t.len() != y.len() {
        return Err(Error::FitInput(format!(
            "exponential fit needs at least 4 paired points, got {} times and {} values",
            t.len(),
            y.len()
        )));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::FitInput("data contain non-finite values".into()));
    }
    let (lo, hi) = min_max(y);
    if hi - lo < NON_DECAYING_TOL {
        return Ok(non_decaying(y));
    }
    let p0 = exponential_guess(t, y);
    let bounds = Bounds::new(vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY], vec![f64::INFINITY; 3]);
    let fit = least_squares(exponential_model, &["amplitude", "t1", "offset"], t, y, &p0, &bounds)?;
    let (t_lo, t_hi) = min_max(t);
    let (a, t1) = (fit.parameters[0], fit.parameters[1]);
    let decay = a.abs() * ((-t_lo / t1).exp() - (-t_hi / t1).exp());
    if decay < NON_DECAYING_TOL {
        return Ok(non_decaying(y));
    }
    Ok(fit)
}

fn non_decaying(y: &[f64]) -> FitResult {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let residual_norm = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    FitResult {
        names: vec!["amplitude".into(), "t1".into(), "offset".into()],
        parameters: vec![0.0, f64::INFINITY, mean],
        standard_errors: vec![0.0, f64::INFINITY, 0.0],
        residual_norm,
        converged: true,
        iterations: 0,
        residual_history: vec![residual_norm],
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Initial (A, T1, c): c from the last sample, T1 from a log-linear
/// regression over the points whose excursion from c is within the first
/// decade of the initial excursion.
fn exponential_guess(t: &[f64], y: &[f64]) -> [f64; 3] {
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let (first, last) = (order[0], order[order.len() - 1]);
    let c0 = y[last];
    let a0 = y[first] - c0;
    let span = t[last] - t[first];
    let early: Vec<(f64, f64)> = order
        .iter()
        .map(|&k| (t[k], (y[k] - c0) / a0))
        .take_while(|&(_, u)| u >= 0.1)
        .map(|(tk, u)| (tk, u.ln()))
        .collect();
    let t1 = if early.len() >= 2 {
        let n = early.len() as f64;
        let mt = early.iter().map(|e| e.0).sum::<f64>() / n;
        let ml = early.iter().map(|e| e.1).sum::<f64>() / n;
        let sxy: f64 = early.iter().map(|e| (e.0 - mt) * (e.1 - ml)).sum();
        let sxx: f64 = early.iter().map(|e| (e.0 - mt).powi(2)).sum();
        let slope = sxy / sxx;
        if slope < 0.0 { -1.0 / slope } else { span }
    } else {
        // Decays past the first decade within one sample interval.
        let dt = t[order[1]] - t[first];
        dt / (a0 / (y[order[1]] - c0)).abs().max(std::f64::consts::E).ln()
    };
    [a0, if t1.is_finite() && t1 > 0.0 { t1 } else { span.max(1.0) }, c0]
}

/// Which dressed line a phase scan belongs to: the antisymmetric state is
/// dark where the qubits are driven in phase, the symmetric one where they
/// are driven in antiphase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseBranch {
    Antisymmetric,
    Symmetric,
}

impl PhaseBranch {
    fn sign(self) -> f64 {
        match self {
            PhaseBranch::Antisymmetric => -1.0,
            PhaseBranch::Symmetric => 1.0,
        }
    }

    /// φ − φ0 at which this branch is dark.
    pub fn zero_offset(self) -> f64 {
        match self {
            PhaseBranch::Antisymmetric => 0.0,
            PhaseBranch::Symmetric => PI,
        }
    }
}

/// Quantities held fixed in a phase-response fit: relaxation and coherence
/// times of the line and the Rabi frequency at ξ = 1 with constructive phase
/// divided by √2 (so Ω_R = rabi_scale·√((1 + ξ² ± 2ξcos(φ − φ0))/2)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFitFixed {
    pub t1: f64,
    pub t2: f64,
    pub rabi_scale: f64,
}

/// Rabi frequency of one line at relative drive phase φ.
pub fn phase_rabi_frequency(fixed: &PhaseFitFixed, branch: PhaseBranch, xi: f64, phi: f64, phi0: f64) -> f64 {
    let w = (1.0 + xi * xi + branch.sign() * 2.0 * xi * (phi - phi0).cos()) / 2.0;
    fixed.rabi_scale * w.max(0.0).sqrt()
}

/// Fits S(φ) = S0·{1 − 1/(1 + T1·T2·Ω_R(ξ, φ − φ0)²)}/2 for parameters
/// (s0, phi0, xi). phi0 is returned wrapped into (−π, π].
pub fn fit_phase_response(phi: &[f64], s: &[f64], fixed: PhaseFitFixed, branch: PhaseBranch) -> Result<FitResult> {
    if phi.len() != s.len() || phi.len() < 4 {
        return Err(Error::FitInput("phase fit needs at least 4 paired points".into()));
    }
    let (lo, hi) = min_max(phi);
    if hi - lo < PHASE_COVERAGE * TAU {
        return Err(Error::InsufficientCoverage(format!(
            "phase span {:.4} rad is below {:.4} rad",
            hi - lo,
            PHASE_COVERAGE * TAU
        )));
    }
    if !(fixed.t1 > 0.0 && fixed.t2 > 0.0 && fixed.rabi_scale > 0.0) {
        return Err(Error::FitInput("t1, t2 and rabi_scale must be positive".into()));
    }
    let model = |p: &[f64], x: f64| {
        let omega = phase_rabi_frequency(&fixed, branch, p[2], x, p[1]);
        p[0] * bloch_steady_state(fixed.t1, fixed.t2, omega).unwrap_or(f64::NAN)
    };
    let kmin = (0..s.len()).min_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs())).unwrap();
    let phi0 = wrap_phase(phi[kmin] - branch.zero_offset());
    let (_, s_max) = min_max(s);
    let peak = bloch_steady_state(fixed.t1, fixed.t2, fixed.rabi_scale * SQRT_2_F)?;
    let s0 = if s_max > 0.0 { s_max / peak } else { 1.0 };
    let xi0 = contrast_guess(s);
    let bounds = Bounds::new(vec![0.0, f64::NEG_INFINITY, 0.0], vec![f64::INFINITY; 3]);
    let mut fit = least_squares(model, &["s0", "phi0", "xi"], phi, s, &[s0, phi0, xi0], &bounds)?;
    fit.parameters[1] = wrap_phase(fit.parameters[1]);
    Ok(fit)
}

/// ξ from the weak-drive contrast S_min/S_max = ((1 − ξ)/(1 + ξ))². The
/// contrast cannot tell ξ from 1/ξ; the root ξ ≤ 1 is taken.
fn contrast_guess(s: &[f64]) -> f64 {
    let (lo, hi) = min_max(s);
    if !(hi > 0.0) {
        return 1.0;
    }
    let r = (lo.max(0.0) / hi).sqrt();
    ((1.0 - r) / (1.0 + r)).max(1e-3)
}

const SQRT_2_F: f64 = std::f64::consts::SQRT_2;

/// Maps an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI { w - TAU } else { w }
}
