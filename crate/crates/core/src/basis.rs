//! Orthonormal traceless Hermitian bases.
//!
//! [`GeneratorBasis`] holds the generalized Gell-Mann matrices of `su(n)`,
//! normalized so that `Tr(T_i T_j) = δ_ij`. The order is fixed:
//!
//! 1. symmetric matrices `(E_jk + E_kj)/√2` for `j < k`, lexicographic in `(j, k)`;
//! 2. antisymmetric matrices `-i(E_jk - E_kj)/√2` for `j < k`, same order;
//! 3. diagonal matrices `diag(1, …, 1, -l, 0, …)/√(l(l+1))` for `l = 1..n-1`.
//!
//! For `n = 2` this gives `σ_x/√2, σ_y/√2, σ_z/√2`.
//!
//! [`ProductBasis`] builds the bipartite basis on `C^nA ⊗ C^nB` from the two
//! local bases, in three blocks: local terms on A, local terms on B, and
//! correlation terms.

use crate::error::{Error, Result};
use crate::linalg::{hs_inner, identity, kron, CMatrix, I, ONE};

#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    n: usize,
    generators: Vec<CMatrix>,
}

impl GeneratorBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

pub fn build_generator_basis(n: usize) -> Result<GeneratorBasis> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "generator basis needs n >= 2, got {n}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut generators = Vec::with_capacity(n * n - 1);

    for j in 0..n {
        for k in (j + 1)..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, k)] = ONE * s;
            m[(k, j)] = ONE * s;
            generators.push(m);
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut m = CMatrix::zeros(n, n);
            m[(j, k)] = -I * s;
            m[(k, j)] = I * s;
            generators.push(m);
        }
    }
    for l in 1..n {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..l {
            m[(i, i)] = ONE * norm;
        }
        m[(l, l)] = ONE * (-(l as f64) * norm);
        generators.push(m);
    }

    Ok(GeneratorBasis { n, generators })
}

#[derive(Debug, Clone)]
pub struct ProductBasis {
    n_a: usize,
    n_b: usize,
    elements: Vec<CMatrix>,
}

impl ProductBasis {
    pub fn dims(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<CMatrix> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sizes of the A-local, B-local and correlation blocks.
    pub fn block_sizes(&self) -> (usize, usize, usize) {
        let a = self.n_a * self.n_a - 1;
        let b = self.n_b * self.n_b - 1;
        (a, b, a * b)
    }
}

/// Elements are `T_i^A ⊗ I/√nB`, then `I/√nA ⊗ T_j^B`, then `T_i^A ⊗ T_j^B`
/// with `i` as the outer index.
pub fn build_product_basis(n_a: usize, n_b: usize) -> Result<ProductBasis> {
    if n_a < 2 || n_b < 2 {
        return Err(Error::InvalidDimension(format!(
            "product basis needs both dimensions >= 2, got {n_a}x{n_b}"
        )));
    }
    let basis_a = build_generator_basis(n_a)?;
    let basis_b = build_generator_basis(n_b)?;
    let id_a = identity(n_a) / ONE.scale((n_a as f64).sqrt());
    let id_b = identity(n_b) / ONE.scale((n_b as f64).sqrt());

    let mut elements = Vec::with_capacity(n_a * n_a * n_b * n_b - 1);
    elements.extend(basis_a.generators().iter().map(|t| kron(t, &id_b)));
    elements.extend(basis_b.generators().iter().map(|t| kron(&id_a, t)));
    for ta in basis_a.generators() {
        for tb in basis_b.generators() {
            elements.push(kron(ta, tb));
        }
    }
    Ok(ProductBasis { n_a, n_b, elements })
}

/// Largest deviation of the Hilbert-Schmidt Gram matrix from the identity.
pub fn gram_deviation(elements: &[CMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((hs_inner(a, b) - ONE * target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_error, trace};
    use num_complex::Complex64;

    fn pauli() -> [CMatrix; 3] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        [
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ]
    }

    #[test]
    fn qubit_basis_is_scaled_pauli() {
        let basis = build_generator_basis(2).unwrap();
        assert_eq!(basis.len(), 3);
        for (t, s) in basis.generators().iter().zip(pauli()) {
            let expected = s / ONE.scale(2f64.sqrt());
            assert!((t - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn generator_bases_are_orthonormal_and_traceless() {
        for n in 2..=6 {
            let basis = build_generator_basis(n).unwrap();
            assert_eq!(basis.len(), n * n - 1);
            assert!(gram_deviation(basis.generators()) < 1e-12, "n={n}");
            for t in basis.generators() {
                assert!(trace(t).norm() < 1e-12);
                assert!(hermiticity_error(t) < 1e-15);
            }
        }
    }

    #[test]
    fn qutrit_basis_has_eight_elements() {
        let basis = build_generator_basis(3).unwrap();
        assert_eq!(basis.len(), 8);
        assert!(gram_deviation(basis.generators()) < 1e-12);
    }

    #[test]
    fn rejects_small_dimensions() {
        assert!(matches!(
            build_generator_basis(1),
            Err(Error::InvalidDimension(_))
        ));
        assert!(build_product_basis(2, 1).is_err());
        assert!(build_product_basis(0, 3).is_err());
    }

    #[test]
    fn product_basis_block_sizes() {
        let b = build_product_basis(2, 2).unwrap();
        assert_eq!(b.len(), 15);
        assert_eq!(b.block_sizes(), (3, 3, 9));
        let b = build_product_basis(2, 3).unwrap();
        assert_eq!(b.len(), 35);
        assert_eq!(b.block_sizes(), (3, 8, 24));
    }

    #[test]
    fn reconstruction_spans_unit_trace_hermitian() {
        // arbitrary Hermitian unit-trace 6x6 matrix
        let n = 6;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = Complex64::new(
                    ((i * 5 + j * 3) % 7) as f64 * 0.03,
                    ((i * 2 + j) % 5) as f64 * 0.02,
                );
                a[(i, j)] += v;
                a[(j, i)] += v.conj();
            }
        }
        let tr = trace(&a).re;
        a += identity(n) * ONE.scale((1.0 - tr) / n as f64);
        let basis = build_product_basis(2, 3).unwrap();
        let mut rebuilt = identity(n) / ONE.scale(n as f64);
        for t in basis.elements() {
            rebuilt += t * hs_inner(t, &a);
        }
        assert!((rebuilt - a).iter().all(|d| d.norm() < 1e-10));
    }
}
