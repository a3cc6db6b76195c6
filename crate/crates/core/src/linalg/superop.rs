use nalgebra::DVector;

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Column-stacking vectorization: `vec(A)[i + j*d] = A[i, j]`.
pub fn vec(a: &ComplexMatrix) -> DVector<C64> {
    // nalgebra stores matrices column-major
    DVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &DVector<C64>) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::NotSquareLength(v.len()));
    }
    Ok(ComplexMatrix::from_column_slice(d, d, v.as_slice()))
}

/// A linear map on d x d operators in its d^2 x d^2 matrix form.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dim {dim} needs {0}x{0}, got {1}x{2}",
                dim * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim, dim * dim),
        }
    }

    /// Superoperator of rho -> A rho B^H, which is conj(B) ⊗ A.
    pub fn conjugation(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        let m = b.map(|z| z.conj()).kronecker(a);
        Self {
            dim: a.nrows(),
            matrix: m,
        }
    }

    /// Superoperator of rho -> -i [H, rho].
    pub fn commutator(h: &ComplexMatrix) -> Self {
        let d = h.nrows();
        let id = ComplexMatrix::identity(d, d);
        let m = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
        Self { dim: d, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dim {} applied to {}x{}",
                self.dim,
                rho.nrows(),
                rho.ncols()
            )));
        }
        unvec(&(&self.matrix * vec(rho)))
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * &first.matrix,
        }
    }

    /// Choi operator sum_ij |i><j| ⊗ Phi(|i><j|).
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.dim;
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                // column i + j*d of M is vec(Phi(|i><j|))
                let col = self.matrix.column(i + j * d);
                for a in 0..d {
                    for b in 0..d {
                        out[(i * d + a, j * d + b)] = col[a + b * d];
                    }
                }
            }
        }
        out
    }
}

/// Builds the superoperator of a linear map by applying it to every matrix
/// unit |i><j|.
pub fn superop_of_channel<F>(apply: F, d: usize) -> Result<Superoperator>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
{
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let out = apply(&unit)?;
            if out.nrows() != d || out.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "map returned {}x{} for input dim {d}",
                    out.nrows(),
                    out.ncols()
                )));
            }
            m.set_column(i + j * d, &vec(&out));
        }
    }
    Superoperator::from_matrix(d, m)
}
