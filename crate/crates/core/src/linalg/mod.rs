//! Dense complex linear algebra shared by the simulator, the learner and the
//! controller.
//!
//! Operators are `nalgebra` dynamic matrices over `Complex64`. Vectorization
//! is column-stacking everywhere in this crate: `vec(A)[i + j*d] = A[i, j]`,
//! so a conjugation channel `rho -> A rho B^H` has superoperator
//! `conj(B) ⊗ A`.

mod eig;
mod expm;
pub mod random;
mod superop;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{eig_general, herm_eig, psd_sqrt, GeneralEigen, HermEigen};
pub use expm::{expm, expm_unitary, logm_principal};
pub use superop::{superop_of_channel, unvec, vec, Superoperator};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Numerical tolerances used across the crate.
pub mod tol {
    /// Max entrywise |A - A^H| accepted as Hermitian.
    pub const HERMITIAN: f64 = 1e-10;
    /// Max |tr(rho) - 1| for a density matrix.
    pub const TRACE: f64 = 1e-10;
    /// Most negative eigenvalue tolerated for a PSD operator.
    pub const PSD: f64 = 1e-9;
    /// Eigenvalues below this fraction of the spectral radius are rounding
    /// noise when taking square roots of PSD operators.
    pub const EIG_NOISE: f64 = 1e-14;
    /// Smallest eigenvalue magnitude accepted by the matrix logarithm.
    pub const SINGULAR_EIG: f64 = 1e-12;
    /// Largest eigenvector condition number accepted by the matrix logarithm.
    pub const MAX_EIGVEC_COND: f64 = 1e8;
}

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Outer product |a><b|.
pub fn outer(a: &[C64], b: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Projector onto the `k`-th computational basis state of dimension `d`.
pub fn basis_projector(d: usize, k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(k, k)] = c(1.0, 0.0);
    m
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Max entrywise |A - A^H|.
pub fn hermiticity_error(a: &ComplexMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let err = hermiticity_error(a);
    if err > tol::HERMITIAN {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// (A + A^H) / 2
pub fn hermitize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Max entrywise |A - B|.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Trace of `a * b` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Reduced operator on factor `keep` of a tensor product with factor
/// dimensions `dims`.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} (product {total}) vs matrix {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem index {keep} out of range for dims {dims:?}"
        )));
    }
    let dk = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for l in 0..left {
        for r in 0..right {
            for i in 0..dk {
                let row = (l * dk + i) * right + r;
                for j in 0..dk {
                    let col = (l * dk + j) * right + r;
                    out[(i, j)] += rho[(row, col)];
                }
            }
        }
    }
    Ok(out)
}

/// A density operator together with the dimensions of its tensor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let rho = Self::from_parts(matrix, dims)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks only the shape against `dims`.
    pub fn from_parts(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || !matrix.is_square() || matrix.nrows() != total {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {dims:?} vs matrix {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, dims })
    }

    pub fn pure(ket: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ket: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::from_parts(outer(&ket, &ket), dims)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: identity(d) * c(1.0 / d as f64, 0.0),
            dims: vec![d],
        }
    }

    /// |k><k| in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Self {
        Self {
            matrix: basis_projector(d, k),
            dims: vec![d],
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot relabel dim {} as {dims:?}",
                self.dim()
            )));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_hermitian(&self.matrix)?;
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > tol::TRACE {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = herm_eig(&self.matrix)?.values[0];
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix {
            matrix: kron(&self.matrix, &other.matrix),
            dims,
        }
    }

    /// Reduced state on factor `keep`.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix> {
        if self.dims.len() < 2 {
            return Err(Error::DimensionMismatch(
                "partial trace needs at least two subsystems".into(),
            ));
        }
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        Ok(DensityMatrix {
            matrix: m,
            dims: vec![self.dims[keep]],
        })
    }
}
