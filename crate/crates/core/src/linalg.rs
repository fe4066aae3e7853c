//! Dense complex matrix helpers shared by the state and criteria code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Hilbert-Schmidt inner product `Tr(A^† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Only the lower triangle is read by the solver; callers are expected to
/// pass matrices that are Hermitian up to rounding.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Hermitian matrix stored as its nonzero entries, used to assemble
/// `I/n + Σ a_i D_i` without touching the (mostly zero) dense directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMatrix {
    pub fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += scale * self`
    #[inline]
    pub fn axpy_into(&self, scale: f64, out: &mut CMatrix) {
        for &(i, j, v) in &self.entries {
            out[(i, j)] += v * scale;
        }
    }

    /// `Tr(self^† m)`, real part.
    pub fn hs_inner_re(&self, m: &CMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| (v.conj() * m[(i, j)]).re)
            .sum()
    }
}
