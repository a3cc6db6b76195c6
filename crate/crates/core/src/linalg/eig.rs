use nalgebra::linalg::{Schur, SymmetricEigen};

use super::{c, check_hermitian, tol, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermEigen {
    /// V f(Λ) V^H for a scalar function applied to the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEigen> {
    check_hermitian(h)?;
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(super::hermitize(h), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEigen { values, vectors })
}

/// Square root of a PSD operator. Eigenvalues at rounding-noise level are
/// set to zero; clearly negative eigenvalues are an error.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.values[0];
    if min < -tol::PSD.max(tol::EIG_NOISE * scale) {
        return Err(Error::NotPositive(min));
    }
    let floor = tol::EIG_NOISE * scale;
    Ok(eig.map(|l| if l <= floor { c(0.0, 0.0) } else { c(l.sqrt(), 0.0) }))
}

/// Eigendecomposition of a general (diagonalizable) complex matrix.
#[derive(Clone, Debug)]
pub struct GeneralEigen {
    pub values: Vec<C64>,
    /// Unit-norm eigenvector columns.
    pub vectors: ComplexMatrix,
}

impl GeneralEigen {
    /// Ratio of extreme singular values of the eigenvector matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.vectors.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Complex Schur form followed by back substitution on the triangular factor.
pub fn eig_general(m: &ComplexMatrix) -> Result<GeneralEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let norm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * norm;

    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = c(1.0, 0.0);
        for j in (0..k).rev() {
            let mut num = c(0.0, 0.0);
            for l in j + 1..=k {
                num += t[(j, l)] * y[(l, k)];
            }
            let denom = t[(j, j)] - lam;
            y[(j, k)] = if denom.norm() > small {
                -num / denom
            } else if num.norm() <= 1e3 * small {
                // repeated eigenvalue with a decoupled block
                c(0.0, 0.0)
            } else {
                -num / small
            };
        }
    }
    let mut vectors = q * y;
    for k in 0..n {
        let nrm = vectors.column(k).norm();
        vectors.column_mut(k).unscale_mut(nrm);
    }
    Ok(GeneralEigen { values, vectors })
}
