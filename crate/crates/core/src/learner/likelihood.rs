//! Probability of a measurement sequence under an embedding model.
//!
//! The raw forward operators shrink geometrically with the sequence length,
//! so both scans are normalized step by step: with `c_i` the conditional
//! probability of outcome `i`,
//!
//! ```text
//! rho_i = Ē_i Phi[rho_{i-1}] Ē_i / c_i,         rho_0 = rho0_S ⊗ rho_ER0
//! E_n   = I,   E_i = Phi^H[Ē_{i+1} E_{i+1} Ē_{i+1}] / c_{i+1}
//! ```
//!
//! so that `tr(rho_i E_i) = 1` for every `i` and `log p = sum_i log c_i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Channel, EmbeddingModel};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitize, identity, kron, trace, trace_product, ComplexMatrix, DensityMatrix};
use crate::sim::{sample_categorical, MeasurementBasis, MeasurementRecord, Trajectory};

/// Smallest conditional probability accepted before a sequence is declared
/// impossible.
pub const MIN_CONDITIONAL_PROB: f64 = 1e-300;

#[derive(Clone, Debug)]
pub struct LikelihoodCache {
    /// Normalized forward states, index 0..=n.
    pub forward: Vec<ComplexMatrix>,
    /// Normalized backward effects, index 0..=n.
    pub backward: Vec<ComplexMatrix>,
    /// Conditional outcome probabilities c_1..c_n (index i-1 holds c_i).
    pub cond_probs: Vec<f64>,
    pub log_p: f64,
}

impl LikelihoodCache {
    pub fn len(&self) -> usize {
        self.cond_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cond_probs.is_empty()
    }

    /// log p^(1/n).
    pub fn log_geo_mean(&self) -> f64 {
        if self.cond_probs.is_empty() {
            0.0
        } else {
            self.log_p / self.cond_probs.len() as f64
        }
    }
}

/// Ē_k = |psi_k><psi_k| ⊗ I_ER for every outcome of the basis.
pub(crate) fn outcome_projectors(basis: &MeasurementBasis, d_er: usize) -> Vec<ComplexMatrix> {
    (0..basis.len())
        .map(|k| kron(&basis.projector(k), &identity(d_er)))
        .collect()
}

fn check_inputs(m: &EmbeddingModel, traj: &Trajectory) -> Result<()> {
    if traj.basis.dim() != m.d_s() {
        return Err(Error::DimensionMismatch(format!(
            "trajectory basis on dim {}, model d_S = {}",
            traj.basis.dim(),
            m.d_s()
        )));
    }
    if let Some(r) = traj.records.iter().find(|r| r.outcome >= traj.basis.len()) {
        return Err(Error::InvalidParams(format!(
            "outcome {} at step {} outside the basis",
            r.outcome, r.step
        )));
    }
    Ok(())
}

fn forward_scan(
    channel: &Channel,
    projectors: &[ComplexMatrix],
    rho0: ComplexMatrix,
    traj: &Trajectory,
    keep: bool,
) -> Result<(Vec<ComplexMatrix>, Vec<f64>, ComplexMatrix)> {
    let n = traj.len();
    let mut forward = Vec::with_capacity(if keep { n + 1 } else { 0 });
    let mut cond = Vec::with_capacity(n);
    let mut rho = rho0;
    for (i, rec) in traj.records.iter().enumerate() {
        let proj = &projectors[rec.outcome];
        let evolved = channel.apply(&rho);
        let collapsed = proj * evolved * proj;
        let ci = trace(&collapsed).re;
        if !(ci >= MIN_CONDITIONAL_PROB) {
            return Err(Error::ImpossibleSequence {
                step: i + 1,
                prob: ci,
            });
        }
        if keep {
            forward.push(std::mem::replace(&mut rho, ComplexMatrix::zeros(0, 0)));
        }
        rho = hermitize(&collapsed) / c(ci, 0.0);
        cond.push(ci);
    }
    Ok((forward, cond, rho))
}

/// Forward-only evaluation of log p.
pub fn log_prob(m: &EmbeddingModel, rho0_s: &DensityMatrix, traj: &Trajectory) -> Result<f64> {
    check_inputs(m, traj)?;
    let channel = m.channel()?;
    let projectors = outcome_projectors(&traj.basis, m.d_er());
    let rho0 = m.initial_state(rho0_s)?.into_matrix();
    let (_, cond, _) = forward_scan(&channel, &projectors, rho0, traj, false)?;
    Ok(cond.iter().map(|p| p.ln()).sum())
}

/// Conditional probabilities c_1..c_n of each recorded outcome.
pub fn conditional_probs(
    m: &EmbeddingModel,
    rho0_s: &DensityMatrix,
    traj: &Trajectory,
) -> Result<Vec<f64>> {
    check_inputs(m, traj)?;
    let channel = m.channel()?;
    let projectors = outcome_projectors(&traj.basis, m.d_er());
    let rho0 = m.initial_state(rho0_s)?.into_matrix();
    Ok(forward_scan(&channel, &projectors, rho0, traj, false)?.1)
}

/// Both normalized scans plus the per-step normalizers.
pub fn forward_backward(
    m: &EmbeddingModel,
    rho0_s: &DensityMatrix,
    traj: &Trajectory,
) -> Result<LikelihoodCache> {
    forward_backward_with(m, &m.channel()?, rho0_s, traj)
}

pub(crate) fn forward_backward_with(
    m: &EmbeddingModel,
    channel: &Channel,
    rho0_s: &DensityMatrix,
    traj: &Trajectory,
) -> Result<LikelihoodCache> {
    check_inputs(m, traj)?;
    let projectors = outcome_projectors(&traj.basis, m.d_er());
    let rho0 = m.initial_state(rho0_s)?.into_matrix();
    let (mut forward, cond, last) = forward_scan(channel, &projectors, rho0, traj, true)?;
    forward.push(last);

    let n = traj.len();
    let d = m.sys_dim();
    let mut backward = vec![ComplexMatrix::zeros(0, 0); n + 1];
    backward[n] = identity(d);
    for i in (0..n).rev() {
        let proj = &projectors[traj.records[i].outcome];
        let sandwiched = proj * &backward[i + 1] * proj;
        backward[i] = hermitize(&channel.apply_adjoint(&sandwiched)) / c(cond[i], 0.0);
    }
    let log_p = cond.iter().map(|p| p.ln()).sum();
    Ok(LikelihoodCache {
        forward,
        backward,
        cond_probs: cond,
        log_p,
    })
}

/// Max deviation of tr(rho_i E_i) from 1 across the cache.
pub fn normalization_error(cache: &LikelihoodCache) -> f64 {
    cache
        .forward
        .iter()
        .zip(&cache.backward)
        .map(|(r, e)| (trace_product(r, e) - c(1.0, 0.0)).norm())
        .fold(0.0, f64::max)
}

/// Samples a measurement sequence from the model itself.
pub fn sample_trajectory(
    m: &EmbeddingModel,
    rho0_s: &DensityMatrix,
    basis: &MeasurementBasis,
    n: usize,
    seed: u64,
) -> Result<Trajectory> {
    if basis.dim() != m.d_s() {
        return Err(Error::DimensionMismatch(format!(
            "basis on dim {}, model d_S = {}",
            basis.dim(),
            m.d_s()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel = m.channel()?;
    let projectors = outcome_projectors(basis, m.d_er());
    let mut rho = m.initial_state(rho0_s)?.into_matrix();
    let mut records = Vec::with_capacity(n);
    for step in 1..=n {
        let evolved = channel.apply(&rho);
        let probs: Vec<f64> = projectors
            .iter()
            .map(|p| trace_product(p, &evolved).re.max(0.0))
            .collect();
        let k = sample_categorical(&probs, &mut rng);
        let collapsed = &projectors[k] * evolved * &projectors[k];
        rho = hermitize(&collapsed) / c(probs[k], 0.0);
        records.push(MeasurementRecord {
            step,
            outcome: k,
            probability: probs[k].min(1.0),
        });
    }
    Ok(Trajectory {
        dt: m.dt(),
        basis: basis.clone(),
        records,
        seed,
        params: None,
    })
}
