use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{reduced_bloch, BlochVector};
use super::{build_hamiltonian, conjugate, initial_joint_state, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{c, expm_unitary, identity, kron, outer, ComplexMatrix, DensityMatrix, C64};

/// Orthonormal rank-1 projective measurement on the system.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    kets: Vec<Vec<C64>>,
}

impl MeasurementBasis {
    pub fn from_kets(kets: Vec<Vec<C64>>) -> Result<Self> {
        let d = kets.first().map(Vec::len).unwrap_or(0);
        if d == 0 || kets.len() != d || kets.iter().any(|k| k.len() != d) {
            return Err(Error::InvalidParams(format!(
                "measurement basis needs {d} kets of length {d}"
            )));
        }
        for (j, a) in kets.iter().enumerate() {
            for (k, b) in kets.iter().enumerate() {
                let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                if (overlap - c(expect, 0.0)).norm() > 1e-10 {
                    return Err(Error::InvalidParams(format!(
                        "basis not orthonormal: <{j}|{k}> = {overlap}"
                    )));
                }
            }
        }
        Ok(Self { kets })
    }

    /// Computational basis {|e>, |g>}.
    pub fn z() -> Self {
        Self {
            kets: vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
        }
    }

    /// {|+>, |->}.
    pub fn x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            kets: vec![vec![c(s, 0.), c(s, 0.)], vec![c(s, 0.), c(-s, 0.)]],
        }
    }

    /// {|+i>, |-i>}.
    pub fn y() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            kets: vec![vec![c(s, 0.), c(0., s)], vec![c(s, 0.), c(0., -s)]],
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "x" => Ok(Self::x()),
            "y" => Ok(Self::y()),
            "z" => Ok(Self::z()),
            other => Err(Error::Config(format!(
                "unknown basis '{other}' (expected x, y or z)"
            ))),
        }
    }

    pub fn kets(&self) -> &[Vec<C64>] {
        &self.kets
    }

    pub fn len(&self) -> usize {
        self.kets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kets[0].len()
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        outer(&self.kets[k], &self.kets[k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step: usize,
    pub outcome: usize,
    /// Probability the outcome had when it was sampled. Diagnostic only.
    pub probability: f64,
}

/// A single long sequence of projective measurements spaced by `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub basis: MeasurementBasis,
    pub records: Vec<MeasurementRecord>,
    pub seed: u64,
    /// Simulator parameters, when the data came from the spin-boson simulator.
    pub params: Option<SystemParams>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.outcome)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.step != i + 1 {
                return Err(Error::InvalidParams(format!(
                    "record {i} has step {} (steps must be contiguous from 1)",
                    r.step
                )));
            }
            if r.outcome >= self.basis.len() {
                return Err(Error::InvalidParams(format!(
                    "record {i} has outcome {} for a basis of size {}",
                    r.outcome,
                    self.basis.len()
                )));
            }
            if !(0.0..=1.0).contains(&r.probability) {
                return Err(Error::InvalidParams(format!(
                    "record {i} has probability {}",
                    r.probability
                )));
            }
        }
        Ok(())
    }

    /// Records `start..start+len`, renumbered from 1.
    pub fn slice(&self, start: usize, len: usize) -> Trajectory {
        let end = (start + len).min(self.records.len());
        let records = self.records[start.min(end)..end]
            .iter()
            .enumerate()
            .map(|(i, r)| MeasurementRecord { step: i + 1, ..*r })
            .collect();
        Trajectory {
            records,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Trajectory {
        Trajectory {
            dt: self.dt,
            basis: self.basis.clone(),
            records: Vec::new(),
            seed: self.seed,
            params: self.params.clone(),
        }
    }
}

/// Inverse-CDF draw over `probs`; ties go to the lower index.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed on the rounding gap at the top end
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Projective measurement of the first tensor factor. Returns the outcome,
/// the collapsed joint state (the rest is conditioned, not reset) and the
/// outcome probability.
pub fn measure_system<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<(usize, DensityMatrix, f64)> {
    let ds = basis.dim();
    if rho.dims().first() != Some(&ds) {
        return Err(Error::DimensionMismatch(format!(
            "basis on dim {ds} vs state dims {:?}",
            rho.dims()
        )));
    }
    let rest = rho.dim() / ds;
    let reduced = if rho.dims().len() > 1 {
        crate::linalg::partial_trace(rho.matrix(), &[ds, rest], 0)?
    } else {
        rho.matrix().clone()
    };
    let probs: Vec<f64> = basis
        .kets()
        .iter()
        .map(|k| {
            let p: C64 = (0..ds)
                .flat_map(|i| (0..ds).map(move |j| (i, j)))
                .map(|(i, j)| k[i].conj() * reduced[(i, j)] * k[j])
                .sum();
            p.re.max(0.0)
        })
        .collect();
    if probs.iter().all(|&p| p < 1e-15) {
        return Err(Error::InvalidState(
            "all measurement outcomes have vanishing probability".into(),
        ));
    }
    let k = sample_categorical(&probs, rng);
    let proj = kron(&basis.projector(k), &identity(rest));
    let collapsed = &proj * rho.matrix() * &proj / c(probs[k], 0.0);
    let collapsed = DensityMatrix::from_parts(crate::linalg::hermitize(&collapsed), rho.dims().to_vec())?;
    Ok((k, collapsed, probs[k]))
}

/// Free evolution (Bx = 0) for `dt` followed by a system measurement,
/// repeated `n` times from |e><e| ⊗ thermal bath.
pub fn generate_trajectory(
    p: &SystemParams,
    n: usize,
    dt: f64,
    basis: &MeasurementBasis,
    seed: u64,
) -> Result<Trajectory> {
    generate_trajectory_traced(p, n, dt, basis, seed).map(|(t, _)| t)
}

/// As [`generate_trajectory`], also returning the reduced Bloch vector just
/// before each measurement.
pub fn generate_trajectory_traced(
    p: &SystemParams,
    n: usize,
    dt: f64,
    basis: &MeasurementBasis,
    seed: u64,
) -> Result<(Trajectory, Vec<BlochVector>)> {
    p.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams("trajectory length must be >= 1".into()));
    }
    if basis.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "qubit basis expected, got dimension {}",
            basis.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = expm_unitary(&build_hamiltonian(p, 0.0), dt)?;
    let mut rho = initial_joint_state(p);
    let mut records = Vec::with_capacity(n);
    let mut bloch = Vec::with_capacity(n);
    for step in 1..=n {
        rho = conjugate(&rho, &u)?;
        bloch.push(reduced_bloch(&rho)?);
        let (outcome, next, probability) = measure_system(&rho, basis, &mut rng)?;
        rho = next;
        records.push(MeasurementRecord {
            step,
            outcome,
            probability: probability.min(1.0),
        });
    }
    let traj = Trajectory {
        dt,
        basis: basis.clone(),
        records,
        seed,
        params: Some(p.clone()),
    };
    Ok((traj, bloch))
}
