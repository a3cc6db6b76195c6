//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qembed::learner::{params_to_hermitian, EmbeddingModel};
use qembed::linalg::{c, expm, identity, kron, partial_trace, trace, ComplexMatrix, C64};
use qembed::sim::{MeasurementBasis, MeasurementRecord, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trajectory with uniformly random outcomes.
pub fn random_trajectory(n: usize, basis: MeasurementBasis, dt: f64, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = basis.len();
    let records = (1..=n)
        .map(|step| MeasurementRecord {
            step,
            outcome: rng.random_range(0..k),
            probability: 0.5,
        })
        .collect();
    Trajectory {
        dt,
        basis,
        records,
        seed,
        params: None,
    }
}

/// U = exp(-i H dt) via the general-purpose Padé exponential.
pub fn naive_unitary(m: &EmbeddingModel) -> ComplexMatrix {
    expm(&(m.hamiltonian() * c(0.0, -m.dt()))).unwrap()
}

/// U and its directional derivative along E, read off the block exponential
/// exp([[A, B], [0, A]]) = [[e^A, L(A, B)], [0, e^A]].
pub fn unitary_and_derivative(m: &EmbeddingModel, e: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = m.total_dim();
    let a = m.hamiltonian() * c(0.0, -m.dt());
    let b = e * c(0.0, -m.dt());
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&a);
    big.view_mut((n, n), (n, n)).copy_from(&a);
    big.view_mut((0, n), (n, n)).copy_from(&b);
    let ex = expm(&big).unwrap();
    (
        ex.view((0, 0), (n, n)).into_owned(),
        ex.view((0, n), (n, n)).into_owned(),
    )
}

/// tr_A(U (rho ⊗ rho_A) V^H) on the dilated space.
fn dilate_and_trace(m: &EmbeddingModel, u: &ComplexMatrix, rho: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    let joint = u * kron(rho, m.rho_a().matrix()) * v.adjoint();
    partial_trace(&joint, &[m.sys_dim(), m.d_a()], 0).unwrap()
}

pub fn naive_channel(m: &EmbeddingModel, rho: &ComplexMatrix) -> ComplexMatrix {
    let u = naive_unitary(m);
    dilate_and_trace(m, &u, rho, &u)
}

fn projector(basis: &MeasurementBasis, k: usize, d_er: usize) -> ComplexMatrix {
    let ket = &basis.kets()[k];
    let d = ket.len();
    let p = ComplexMatrix::from_fn(d, d, |i, j| ket[i] * ket[j].conj());
    kron(&p, &identity(d_er))
}

fn initial(m: &EmbeddingModel, rho0_s: &ComplexMatrix) -> ComplexMatrix {
    kron(rho0_s, m.rho_er0().matrix())
}

/// Unnormalized product p = tr(Ē_n Phi[... Ē_1 Phi[rho_0] Ē_1 ...] Ē_n).
pub fn naive_prob(m: &EmbeddingModel, rho0_s: &ComplexMatrix, traj: &Trajectory) -> f64 {
    let u = naive_unitary(m);
    let mut rho = initial(m, rho0_s);
    for r in &traj.records {
        let e = projector(&traj.basis, r.outcome, m.d_er());
        rho = &e * dilate_and_trace(m, &u, &rho, &u) * &e;
    }
    trace(&rho).re
}

/// d log p / d theta by forward-mode differentiation of the unnormalized
/// product, one parameter direction at a time.
pub fn naive_grad(m: &EmbeddingModel, rho0_s: &ComplexMatrix, traj: &Trajectory) -> Vec<f64> {
    let n_params = m.n_params();
    let dim = m.total_dim();
    let p = naive_prob(m, rho0_s, traj);
    let projs: Vec<ComplexMatrix> = traj
        .records
        .iter()
        .map(|r| projector(&traj.basis, r.outcome, m.d_er()))
        .collect();
    (0..n_params)
        .map(|k| {
            let mut unit = vec![0.0; n_params];
            unit[k] = 1.0;
            let dir = params_to_hermitian(&unit, dim).unwrap();
            let (u, du) = unitary_and_derivative(m, &dir);
            let mut rho = initial(m, rho0_s);
            let mut drho = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
            for e in &projs {
                let d_phi = dilate_and_trace(m, &du, &rho, &u) + dilate_and_trace(m, &u, &rho, &du);
                drho = e * (d_phi + dilate_and_trace(m, &u, &drho, &u)) * e;
                rho = e * dilate_and_trace(m, &u, &rho, &u) * e;
            }
            trace(&drho).re / p
        })
        .collect()
}

/// Central finite differences of `f` at `theta`.
pub fn central_diff(theta: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            x[k] = theta[k] + h;
            let up = f(&x);
            x[k] = theta[k] - h;
            let down = f(&x);
            x[k] = theta[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// max |a - b| / max |b|.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    num / den.max(1e-300)
}

pub fn ket_density(ket: &[C64]) -> ComplexMatrix {
    let d = ket.len();
    ComplexMatrix::from_fn(d, d, |i, j| ket[i] * ket[j].conj())
}
