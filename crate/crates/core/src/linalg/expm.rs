use super::{c, eig_general, herm_eig, identity, tol, ComplexMatrix};
use crate::error::{Error, Result};

/// U = exp(-i H dt) for Hermitian H, through the spectral decomposition.
pub fn expm_unitary(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.map(|l| c(0.0, -l * dt).exp()))
}

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Degree-13 Padé coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential of a general square matrix by scaling and squaring
/// with a degree-13 Padé approximant.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expm of {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * c(0.5f64.powi(s), 0.0);
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c(PADE13[k], 0.0);

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Eigen("singular Padé denominator in expm".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Principal matrix logarithm by diagonalization.
///
/// Rejects matrices with an eigenvalue of magnitude below
/// [`tol::SINGULAR_EIG`] or an eigenvector condition number above
/// [`tol::MAX_EIGVEC_COND`]. Imaginary parts of the eigenvalue logarithms lie
/// in (-pi, pi]; generators that differ by 2*pi*i shifts are not resolved.
pub fn logm_principal(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_general(m)?;
    for (index, mu) in eig.values.iter().enumerate() {
        if mu.norm() < tol::SINGULAR_EIG {
            return Err(Error::SingularChannel {
                index,
                magnitude: mu.norm(),
            });
        }
    }
    let cond = eig.condition_number();
    if cond > tol::MAX_EIGVEC_COND {
        return Err(Error::Defective(cond));
    }
    let w = &eig.vectors;
    let w_inv = w
        .clone()
        .try_inverse()
        .ok_or(Error::Defective(f64::INFINITY))?;
    let mut scaled = w.clone();
    for (j, mu) in eig.values.iter().enumerate() {
        let l = mu.ln();
        for i in 0..w.nrows() {
            scaled[(i, j)] *= l;
        }
    }
    Ok(scaled * w_inv)
}
