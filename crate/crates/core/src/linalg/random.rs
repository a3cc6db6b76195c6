//! Seeded random operators for initialization and testing.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, hermitize, ComplexMatrix, C64};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex matrix with independent standard-normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    // fill row-major so the draw order does not depend on storage layout
    for i in 0..d {
        for j in 0..d {
            let re = normal(rng);
            let im = normal(rng);
            m[(i, j)] = c(re, im);
        }
    }
    m
}

/// `scale * (A + A^H) / 2` with `A` Ginibre.
pub fn hermitian<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> ComplexMatrix {
    hermitize(&ginibre(d, rng)) * c(scale, 0.0)
}

pub fn ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| c(normal(rng), normal(rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-distributed unitary via QR with phase correction.
pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Full-rank mixed state G G^H / tr(G G^H).
pub fn density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, rng);
    let m = &g * g.adjoint();
    let tr = super::trace(&m);
    hermitize(&(m / tr))
}
