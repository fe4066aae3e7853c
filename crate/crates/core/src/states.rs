//! State families, Bloch coordinates and bipartite matrix operations.
//!
//! A [`StateFamily`] is an affine slice `I/n + Σ a_i D_i` of the state space,
//! where the directions `D_i` are Hilbert-Schmidt orthonormal. The
//! coordinates `a` are therefore Euclidean, and Lebesgue volume in
//! coordinate space is the volume the estimator measures.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::build_product_basis;
use crate::error::{Error, Result};
use crate::linalg::{
    hermiticity_error, identity, kron, min_eigenvalue, trace, CMatrix, SparseMatrix, I, ONE, ZERO,
};

/// Tolerance on the smallest eigenvalue for membership in the state body.
pub const EPS_PSD: f64 = 1e-12;

const SPAN_TOLERANCE: f64 = 1e-10;
const VALIDATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    General,
    BellDiagonal,
    XState,
    RebitRebit,
    #[serde(rename = "qbqt-i")]
    QubitQutritI,
    #[serde(rename = "qbqt-ii")]
    QubitQutritII,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::General,
        FamilyKind::BellDiagonal,
        FamilyKind::XState,
        FamilyKind::RebitRebit,
        FamilyKind::QubitQutritI,
        FamilyKind::QubitQutritII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::General => "general",
            FamilyKind::BellDiagonal => "bell-diagonal",
            FamilyKind::XState => "x-state",
            FamilyKind::RebitRebit => "rebit-rebit",
            FamilyKind::QubitQutritI => "qbqt-i",
            FamilyKind::QubitQutritII => "qbqt-ii",
        }
    }

    /// Subsystem dimensions a restricted family is tied to.
    pub fn fixed_dims(self) -> Option<(usize, usize)> {
        match self {
            FamilyKind::General => None,
            FamilyKind::BellDiagonal | FamilyKind::XState | FamilyKind::RebitRebit => Some((2, 2)),
            FamilyKind::QubitQutritI | FamilyKind::QubitQutritII => Some((2, 3)),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

#[derive(Debug, Clone)]
pub struct StateFamily {
    kind: FamilyKind,
    n_a: usize,
    n_b: usize,
    directions: Vec<CMatrix>,
    sparse: Vec<SparseMatrix>,
}

impl StateFamily {
    /// Builds a family. `dims` is required for [`FamilyKind::General`] and,
    /// when given for a restricted family, must match its fixed dimensions.
    pub fn new(kind: FamilyKind, dims: Option<(usize, usize)>) -> Result<Self> {
        let (n_a, n_b) = match (kind.fixed_dims(), dims) {
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidDimension(
                    "the general family needs explicit dimensions".into(),
                ))
            }
            (Some(fixed), None) => fixed,
            (Some(fixed), Some(d)) if fixed == d => fixed,
            (Some(fixed), Some(d)) => {
                return Err(Error::InvalidDimension(format!(
                    "family {kind} is defined on {}x{}, not {}x{}",
                    fixed.0, fixed.1, d.0, d.1
                )))
            }
        };
        let directions = match kind {
            FamilyKind::General => build_product_basis(n_a, n_b)?.into_elements(),
            FamilyKind::BellDiagonal => half_products(&[(1, 1), (2, 2), (3, 3)]),
            FamilyKind::XState => {
                half_products(&[(3, 0), (0, 3), (1, 1), (1, 2), (2, 1), (2, 2), (3, 3)])
            }
            FamilyKind::RebitRebit => half_products(&[
                (0, 1),
                (0, 3),
                (1, 0),
                (3, 0),
                (1, 1),
                (1, 3),
                (2, 2),
                (3, 1),
                (3, 3),
            ]),
            FamilyKind::QubitQutritI => qubit_qutrit_directions(4),
            FamilyKind::QubitQutritII => qubit_qutrit_directions(8),
        };
        let sparse = directions.iter().map(SparseMatrix::from_dense).collect();
        Ok(Self {
            kind,
            n_a,
            n_b,
            directions,
            sparse,
        })
    }

    pub fn general(n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(FamilyKind::General, Some((n_a, n_b)))
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    /// Dimension of the ambient Hilbert space, `nA * nB`.
    pub fn n(&self) -> usize {
        self.n_a * self.n_b
    }

    /// Number of real coordinates.
    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[CMatrix] {
        &self.directions
    }

    pub fn label(&self) -> String {
        format!("{} {}x{}", self.kind, self.n_a, self.n_b)
    }

    /// Squared radius of the sphere of pure states, `(n-1)/n`.
    pub fn purity_bound(&self) -> f64 {
        let n = self.n() as f64;
        (n - 1.0) / n
    }

    fn check_len(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: coords.len(),
            });
        }
        Ok(())
    }

    /// `I/n + Σ a_i D_i`; Hermitian with unit trace, not necessarily positive.
    pub fn to_matrix(&self, coords: &[f64]) -> Result<CMatrix> {
        self.check_len(coords)?;
        let mut m = CMatrix::zeros(self.n(), self.n());
        self.assemble_into(coords, &mut m);
        Ok(m)
    }

    /// Writes `I/n + Σ a_i D_i` into `out`, which must be `n x n`.
    pub(crate) fn assemble_into(&self, coords: &[f64], out: &mut CMatrix) {
        out.fill(ZERO);
        out.fill_diagonal(ONE.scale(1.0 / self.n() as f64));
        self.add_combination(coords, 1.0, out);
    }

    /// `out += scale * Σ c_i D_i` (no identity term).
    pub(crate) fn add_combination(&self, coords: &[f64], scale: f64, out: &mut CMatrix) {
        for (c, d) in coords.iter().zip(&self.sparse) {
            if *c != 0.0 {
                d.axpy_into(scale * c, out);
            }
        }
    }

    /// Coordinates of `m` by Hilbert-Schmidt projection onto the directions.
    pub fn coordinates_of(&self, m: &CMatrix) -> Result<Vec<f64>> {
        let n = self.n();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "expected a {n}x{n} matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermiticity_error(m);
        let tr = trace(m);
        if herm > SPAN_TOLERANCE || (tr - ONE).norm() > SPAN_TOLERANCE {
            return Err(Error::NotInFamily {
                family: self.label(),
                residual: herm.max((tr - ONE).norm()),
            });
        }
        let coords: Vec<f64> = self.sparse.iter().map(|d| d.hs_inner_re(m)).collect();
        let rebuilt = self.to_matrix(&coords)?;
        let residual = (rebuilt - m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        if residual > SPAN_TOLERANCE {
            return Err(Error::NotInFamily {
                family: self.label(),
                residual,
            });
        }
        Ok(coords)
    }

    /// Membership in the state body: smallest eigenvalue `>= -EPS_PSD`.
    pub fn is_state(&self, coords: &[f64]) -> bool {
        if coords.len() != self.dimension() {
            return false;
        }
        // Tr ρ² <= 1 for every state; the slack keeps this shortcut strictly
        // weaker than the eigenvalue test.
        let norm_sq: f64 = coords.iter().map(|c| c * c).sum();
        if norm_sq > self.purity_bound() + 1e-9 {
            return false;
        }
        let mut m = CMatrix::zeros(self.n(), self.n());
        self.assemble_into(coords, &mut m);
        min_eigenvalue(&m) >= -EPS_PSD
    }
}

impl PartialEq for StateFamily {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.n_a == other.n_a && self.n_b == other.n_b
    }
}

fn pauli(k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    match k {
        0 => m.fill_diagonal(ONE),
        1 => {
            m[(0, 1)] = ONE;
            m[(1, 0)] = ONE;
        }
        2 => {
            m[(0, 1)] = -I;
            m[(1, 0)] = I;
        }
        3 => {
            m[(0, 0)] = ONE;
            m[(1, 1)] = -ONE;
        }
        _ => unreachable!("pauli index {k}"),
    }
    m
}

/// `(1/2) σ_j ⊗ σ_k` for each pair, with `σ_0 = I`.
fn half_products(pairs: &[(usize, usize)]) -> Vec<CMatrix> {
    pairs
        .iter()
        .map(|&(j, k)| kron(&pauli(j), &pauli(k)) * ONE.scale(0.5))
        .collect()
}

/// Gell-Mann matrix `γ_k`, `k = 1..=8`, in the conventional numbering
/// (`Tr γ_k² = 2`).
pub fn gell_mann(k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    let mut sym = |i: usize, j: usize| {
        m[(i, j)] = ONE;
        m[(j, i)] = ONE;
    };
    match k {
        1 => sym(0, 1),
        4 => sym(0, 2),
        6 => sym(1, 2),
        _ => {}
    }
    let mut anti = |i: usize, j: usize| {
        m[(i, j)] = -I;
        m[(j, i)] = I;
    };
    match k {
        2 => anti(0, 1),
        5 => anti(0, 2),
        7 => anti(1, 2),
        _ => {}
    }
    match k {
        3 => {
            m[(0, 0)] = ONE;
            m[(1, 1)] = -ONE;
        }
        8 => {
            let s = 1.0 / 3f64.sqrt();
            m[(0, 0)] = ONE * s;
            m[(1, 1)] = ONE * s;
            m[(2, 2)] = ONE * (-2.0 * s);
        }
        1..=7 => {}
        _ => panic!("Gell-Mann index {k} out of range 1..=8"),
    }
    m
}

/// `(1/2) σ_k ⊗ γ_i` for `k = x, y, z` (outer) and `i = 1..=count`.
fn qubit_qutrit_directions(count: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(3 * count);
    for k in 1..=3 {
        let s = pauli(k);
        for i in 1..=count {
            out.push(kron(&s, &gell_mann(i)) * ONE.scale(0.5));
        }
    }
    out
}

/// A point of a family's coordinate space.
#[derive(Debug, Clone)]
pub struct BlochVector {
    family: Arc<StateFamily>,
    coords: Vec<f64>,
}

impl BlochVector {
    pub fn new(family: Arc<StateFamily>, coords: Vec<f64>) -> Result<Self> {
        family.check_len(&coords)?;
        Ok(Self { family, coords })
    }

    pub fn zero(family: Arc<StateFamily>) -> Self {
        let coords = vec![0.0; family.dimension()];
        Self { family, coords }
    }

    /// Inverse of [`BlochVector::to_matrix`].
    pub fn from_matrix(family: Arc<StateFamily>, m: &CMatrix) -> Result<Self> {
        let coords = family.coordinates_of(m)?;
        Ok(Self { family, coords })
    }

    pub fn family(&self) -> &Arc<StateFamily> {
        &self.family
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm_squared(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.family.n(), self.family.n());
        self.family.assemble_into(&self.coords, &mut m);
        m
    }

    pub fn is_state(&self) -> bool {
        self.family.is_state(&self.coords)
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let (n_a, n_b) = self.family.dims();
        DensityMatrix::new(n_a, n_b, self.to_matrix())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on `C^nA ⊗ C^nB`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_a: usize,
    n_b: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(n_a: usize, n_b: usize, matrix: CMatrix) -> Result<Self> {
        let n = n_a * n_b;
        if n_a < 1 || n_b < 1 || matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "matrix is {}x{}, expected {n}x{n} for {n_a}x{n_b}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermiticity_error(&matrix);
        if herm > VALIDATION_TOLERANCE {
            return Err(Error::NotAState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > VALIDATION_TOLERANCE {
            return Err(Error::NotAState(format!("trace is {tr}")));
        }
        let lmin = min_eigenvalue(&matrix);
        if lmin < -EPS_PSD {
            return Err(Error::NotAState(format!(
                "smallest eigenvalue {lmin:e} is negative"
            )));
        }
        Ok(Self { n_a, n_b, matrix })
    }

    /// Wraps a matrix already known to be a state, e.g. a point accepted by
    /// the sampler.
    pub(crate) fn new_unchecked(n_a: usize, n_b: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), n_a * n_b);
        Self { n_a, n_b, matrix }
    }

    pub fn maximally_mixed(n_a: usize, n_b: usize) -> Self {
        let n = n_a * n_b;
        Self::new_unchecked(n_a, n_b, identity(n) * ONE.scale(1.0 / n as f64))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(n_a: usize, n_b: usize, psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.len() != n_a * n_b || norm == 0.0 {
            return Err(Error::InvalidParameter(
                "state vector has the wrong length or is zero".into(),
            ));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        let matrix = &v * v.adjoint();
        Self::new(n_a, n_b, matrix)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    pub fn n(&self) -> usize {
        self.n_a * self.n_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Reduced state after tracing out `traced`.
    pub fn partial_trace(&self, traced: Subsystem) -> DensityMatrix {
        let reduced = partial_trace(&self.matrix, self.n_a, self.n_b, traced);
        let (na, nb) = match traced {
            Subsystem::B => (self.n_a, 1),
            Subsystem::A => (1, self.n_b),
        };
        DensityMatrix::new_unchecked(na, nb, reduced)
    }

    pub fn partial_transpose(&self, which: Subsystem) -> CMatrix {
        partial_transpose(&self.matrix, self.n_a, self.n_b, which)
    }

    pub fn reduced_a(&self) -> CMatrix {
        partial_trace(&self.matrix, self.n_a, self.n_b, Subsystem::B)
    }

    pub fn reduced_b(&self) -> CMatrix {
        partial_trace(&self.matrix, self.n_a, self.n_b, Subsystem::A)
    }
}

/// Traces out `traced`; returns `nA x nA` (tracing B) or `nB x nB` (tracing A).
pub fn partial_trace(m: &CMatrix, n_a: usize, n_b: usize, traced: Subsystem) -> CMatrix {
    match traced {
        Subsystem::B => CMatrix::from_fn(n_a, n_a, |i, k| {
            (0..n_b).map(|j| m[(i * n_b + j, k * n_b + j)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(n_b, n_b, |j, l| {
            (0..n_a).map(|i| m[(i * n_b + j, i * n_b + l)]).sum()
        }),
    }
}

/// Partial transpose in the computational product basis:
/// `⟨ij|ρ^{T_A}|kl⟩ = ⟨kj|ρ|il⟩`, and analogously for B.
pub fn partial_transpose(m: &CMatrix, n_a: usize, n_b: usize, which: Subsystem) -> CMatrix {
    let n = n_a * n_b;
    CMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / n_b, row % n_b);
        let (k, l) = (col / n_b, col % n_b);
        match which {
            Subsystem::A => m[(k * n_b + j, i * n_b + l)],
            Subsystem::B => m[(i * n_b + l, k * n_b + j)],
        }
    })
}

/// Analytic spectrum of the Bell-diagonal state with coordinates
/// `(a_x, a_y, a_z)`: `1/4 + f_i`.
pub fn bell_diagonal_eigenvalues(a: [f64; 3]) -> [f64; 4] {
    let [x, y, z] = a;
    [
        0.25 + 0.5 * (-x - y - z),
        0.25 + 0.5 * (x + y - z),
        0.25 + 0.5 * (x - y + z),
        0.25 + 0.5 * (-x + y + z),
    ]
}
