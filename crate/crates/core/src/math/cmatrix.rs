use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Hermiticity tolerance, relative to the largest entry of the matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Small dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    /// Builds an `n x n` matrix from row-major entries.
    pub fn from_rows(n: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        CMatrix(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        CMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.0[(row, col)] = value;
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// `max |(A - A^dagger)_ij|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// `max |(U^dagger U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let prod = self.0.adjoint() * &self.0;
        (prod - DMatrix::<C64>::identity(n, n))
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Columns `cols` of this matrix as a `dim x cols.len()` block.
    pub(crate) fn columns(&self, cols: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), cols.len(), |r, c| self.0[(r, cols[c])])
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim(), self.dim())?;
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.0[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

/// Kronecker product, `(a ⊗ b)[i*nb + k, j*nb + l] = a[i,j] * b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

/// Eigendecomposition of a Hermitian generator, reusable across durations.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > HERMITIAN_TOL * h.max_abs().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        // Symmetrize so the solver only ever sees an exactly Hermitian input.
        let sym = (&h.0 + h.0.adjoint()).map(|z| z * 0.5);
        let eig = SymmetricEigen::new(sym);
        Ok(HermitianEigen {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * t);
            for i in 0..n {
                scaled[(i, j)] *= phase;
            }
        }
        CMatrix(scaled * self.vectors.adjoint())
    }
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn herm_expm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}
