use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, hermitize, kron, partial_trace, psd_sqrt, sigma_x, sigma_y, sigma_z, tol,
    trace_product, ComplexMatrix, DensityMatrix,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch vector of the qubit marginal (the first tensor factor).
pub fn reduced_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    let q = if rho.dims().len() > 1 {
        rho.partial_trace(0)?.into_matrix()
    } else {
        rho.matrix().clone()
    };
    if q.nrows() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Bloch vector needs a qubit, got dim {}",
            q.nrows()
        )));
    }
    Ok(BlochVector {
        x: trace_product(&q, &sigma_x()).re,
        y: trace_product(&q, &sigma_y()).re,
        z: trace_product(&q, &sigma_z()).re,
    })
}

/// Square-root fidelity tr sqrt(sqrt(sigma) rho sqrt(sigma)), clamped to [0, 1].
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between {:?} and {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    let s = psd_sqrt(&hermitize(sigma))?;
    let sandwich = hermitize(&(&s * rho * &s));
    let eig = herm_eig(&sandwich)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eig.values[0] < -tol::PSD.max(tol::EIG_NOISE * scale) {
        return Err(Error::NotPositive(eig.values[0]));
    }
    let floor = tol::EIG_NOISE * scale;
    let f = eig
        .values
        .iter()
        .filter(|&&v| v > floor)
        .fold(0.0, |acc, v| acc + v.sqrt());
    Ok(f.clamp(0.0, 1.0))
}

/// Fidelity between a bipartite state and the product of its marginals.
/// The state's first factor is the system, the remaining factors are grouped
/// as the environment.
pub fn separability(rho: &DensityMatrix) -> Result<f64> {
    let dims = rho.dims();
    if dims.len() < 2 {
        return Err(Error::DimensionMismatch(
            "separability needs a bipartite state".into(),
        ));
    }
    let ds = dims[0];
    let de = rho.dim() / ds;
    let split = [ds, de];
    let sys = partial_trace(rho.matrix(), &split, 0)?;
    let env = partial_trace(rho.matrix(), &split, 1)?;
    fidelity(rho.matrix(), &kron(&sys, &env))
}
