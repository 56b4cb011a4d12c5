//! Composite-space operators for one cavity mode and a register of qubits.
//!
//! Basis convention: the cavity factor comes first, then qubits in index
//! order. Within a qubit the local basis is (g, e), so σ_z|e⟩ = +|e⟩ and
//! σ_+ = |e⟩⟨g|. All matrices are dense; at desk scale the total
//! dimension stays well below a hundred.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Ordered subsystem dimensions of a tensor-product space.
///
/// A composite layout has the cavity at index 0 (dimension `n_max + 1`) and
/// qubits at indices `1..=N`. A local layout has a single factor and is
/// only used for operators that are later embedded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    dims: Vec<usize>,
}

impl SpaceLayout {
    /// Cavity truncated at `n_max` photons plus `n_qubits` two-level systems.
    pub fn cavity_qubits(n_max: usize, n_qubits: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation(n_max, 1));
        }
        let mut dims = vec![n_max + 1];
        dims.extend(std::iter::repeat(2).take(n_qubits));
        Self::new(dims)
    }

    /// Composite layout from explicit dimensions.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Layout(
                "a composite layout needs one cavity and at least one qubit".into(),
            ));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Layout(format!("every dimension must be >= 2, got {dims:?}")));
        }
        if dims[1..].iter().any(|&d| d != 2) {
            return Err(Error::Layout(format!("qubit factors must have dimension 2, got {dims:?}")));
        }
        Ok(Self { dims })
    }

    /// Single-factor layout for a local operator.
    pub fn local(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Layout(format!("local dimension must be >= 2, got {dim}")));
        }
        Ok(Self { dims: vec![dim] })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_composite(&self) -> bool {
        self.dims.len() >= 2
    }

    pub fn n_qubits(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    /// Photon-number truncation of the cavity factor.
    pub fn n_max(&self) -> usize {
        self.dims[0] - 1
    }

    /// Flat basis index of |photons; q_1 … q_N⟩ where `excited[i]` marks
    /// qubit `i + 1` in |e⟩.
    pub fn index(&self, photons: usize, excited: &[bool]) -> Result<usize> {
        if !self.is_composite() || excited.len() != self.n_qubits() {
            return Err(Error::Layout(format!(
                "basis label has {} qubits, layout has {}",
                excited.len(),
                self.n_qubits()
            )));
        }
        if photons > self.n_max() {
            return Err(Error::Layout(format!(
                "photon number {photons} exceeds truncation {}",
                self.n_max()
            )));
        }
        let mut idx = photons;
        for &e in excited {
            idx = idx * 2 + usize::from(e);
        }
        Ok(idx)
    }

    /// Inverse of [`SpaceLayout::index`]: per-factor local indices.
    pub fn decompose(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    }

    /// Total excitation number (photons plus excited qubits) of a basis index.
    pub fn excitations(&self, idx: usize) -> usize {
        self.decompose(idx).iter().sum()
    }
}

/// Dense complex operator tied to a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Layout(format!(
                "matrix is {}x{}, layout dimension is {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self { layout: layout.clone(), matrix: CMatrix::identity(n, n) }
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self { layout: layout.clone(), matrix: CMatrix::zeros(n, n) }
    }

    /// Diagonal operator from real entries.
    pub fn diagonal(layout: &SpaceLayout, entries: impl Fn(usize) -> f64) -> Self {
        let n = layout.total_dim();
        let matrix = CMatrix::from_fn(n, n, |r, c| if r == c { C64::from(entries(r)) } else { ZERO });
        Self { layout: layout.clone(), matrix }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint() }
    }

    /// max |A − A†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        Self { layout: self.layout.clone(), matrix: &self.matrix * c.into() }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        assert_same_layout(&self.layout, &other.layout);
        Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_same_layout(&self.layout, &state.layout);
        StateVector { layout: self.layout.clone(), amplitudes: &self.matrix * &state.amplitudes }
    }

    /// ⟨bra|A|ket⟩
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> C64 {
        bra.inner(&self.apply(ket))
    }

    pub fn expectation(&self, state: &StateVector) -> C64 {
        self.matrix_element(state, state)
    }
}

fn assert_same_layout(a: &SpaceLayout, b: &SpaceLayout) {
    assert_eq!(a, b, "operator layouts differ");
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_same_layout(&self.layout, &rhs.layout);
        Operator { layout: self.layout.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_same_layout(&self.layout, &rhs.layout);
        Operator { layout: self.layout.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_same_layout(&self.layout, &rhs.layout);
        Operator { layout: self.layout.clone(), matrix: &self.matrix * &rhs.matrix }
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

/// Complex amplitudes over a layout's product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "state has {} amplitudes, layout dimension is {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn basis(layout: &SpaceLayout, idx: usize) -> Self {
        let mut amplitudes = CVector::zeros(layout.total_dim());
        amplitudes[idx] = ONE;
        Self { layout: layout.clone(), amplitudes }
    }

    /// |photons; q_1 … q_N⟩ with `excited[i]` marking qubit `i + 1` in |e⟩.
    pub fn fock(layout: &SpaceLayout, photons: usize, excited: &[bool]) -> Result<Self> {
        Ok(Self::basis(layout, layout.index(photons, excited)?))
    }

    /// Linear combination of product-basis kets.
    pub fn superposition(layout: &SpaceLayout, terms: &[(C64, &StateVector)]) -> Self {
        let mut amplitudes = CVector::zeros(layout.total_dim());
        for (c, s) in terms {
            assert_same_layout(layout, &s.layout);
            amplitudes += &s.amplitudes * *c;
        }
        Self { layout: layout.clone(), amplitudes }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() < tol
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { layout: self.layout.clone(), amplitudes: &self.amplitudes / C64::from(n) }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_same_layout(&self.layout, &other.layout);
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> Operator {
        Operator {
            layout: self.layout.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Cavity annihilation operator truncated at `n_max` photons.
pub fn annihilation(n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(Error::InvalidTruncation(n_max, 1));
    }
    let dim = n_max + 1;
    let matrix =
        CMatrix::from_fn(dim, dim, |r, c| if c == r + 1 { C64::from((c as f64).sqrt()) } else { ZERO });
    Operator::new(SpaceLayout::local(dim)?, matrix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// σ_+ = (σ_x + iσ_y)/2 = |e⟩⟨g|
    Plus,
    /// σ_− = (σ_x − iσ_y)/2 = |g⟩⟨e|
    Minus,
}

/// Single-qubit Pauli matrix in the (g, e) basis.
pub fn pauli(kind: Pauli) -> Operator {
    let (a, b, c, d) = match kind {
        Pauli::X => (ZERO, ONE, ONE, ZERO),
        Pauli::Y => (ZERO, I, -I, ZERO),
        Pauli::Z => (-ONE, ZERO, ZERO, ONE),
        Pauli::Plus => (ZERO, ZERO, ONE, ZERO),
        Pauli::Minus => (ZERO, ONE, ZERO, ZERO),
    };
    Operator {
        layout: SpaceLayout { dims: vec![2] },
        matrix: CMatrix::from_row_slice(2, 2, &[a, b, c, d]),
    }
}

/// Lift a local operator onto factor `site` of `layout`, identity elsewhere.
pub fn embed(op: &Operator, layout: &SpaceLayout, site: usize) -> Result<Operator> {
    let dims = layout.dims();
    if site >= dims.len() {
        return Err(Error::Layout(format!("site {site} outside layout of {} factors", dims.len())));
    }
    if op.dim() != dims[site] {
        return Err(Error::Layout(format!(
            "operator dimension {} does not match factor {site} of dimension {}",
            op.dim(),
            dims[site]
        )));
    }
    let mut matrix = CMatrix::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == site { op.matrix.clone() } else { CMatrix::identity(d, d) };
        matrix = matrix.kronecker(&factor);
    }
    Operator::new(layout.clone(), matrix)
}

/// Spectrum of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, each phased so that its
    /// largest-magnitude component is real and positive.
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn vector(&self, layout: &SpaceLayout, k: usize) -> StateVector {
        StateVector { layout: layout.clone(), amplitudes: self.vectors.column(k).into_owned() }
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn hermitian_eig(op: &Operator) -> Result<Eigensystem> {
    hermitian_eig_matrix(op.matrix())
}

pub(crate) fn hermitian_eig_matrix(m: &CMatrix) -> Result<Eigensystem> {
    let herm = max_abs(&(m - m.adjoint()));
    if herm >= 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let sym = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(ONE);
        let phase = if pivot.norm() > 0.0 { pivot.conj() / C64::from(pivot.norm()) } else { ONE };
        vectors.set_column(dst, &(col * phase));
    }
    Ok(Eigensystem { values, vectors })
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
