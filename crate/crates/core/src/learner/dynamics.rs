use super::model::EmbeddingModel;
use crate::error::{Error, Result};
use crate::linalg::{
    c, expm, herm_eig, hermitize, identity, kron, logm_principal, max_abs_diff, sigma_x,
    superop_of_channel, unvec, vec, ComplexMatrix, DensityMatrix, Superoperator,
};

/// Max entry error accepted between exp(M(L) dt) and M(Phi).
pub const GENERATOR_ROUNDTRIP_TOL: f64 = 1e-8;

/// Negative eigenvalues below this are clipped from rollout states.
pub const ROLLOUT_PSD_TOL: f64 = 1e-9;

/// M(Phi) for the model's one-step channel on system ⊗ reservoir.
pub fn channel_superoperator(m: &EmbeddingModel) -> Result<Superoperator> {
    let channel = m.channel()?;
    superop_of_channel(|rho| Ok(channel.apply(rho)), m.sys_dim())
}

/// M(L) = ln(M(Phi)) / dt on the principal branch.
pub fn generator(m: &EmbeddingModel) -> Result<Superoperator> {
    generator_from_channel(&channel_superoperator(m)?, m.dt())
}

pub fn generator_from_channel(phi: &Superoperator, dt: f64) -> Result<Superoperator> {
    let log = logm_principal(phi.matrix())?;
    let l = log / c(dt, 0.0);
    let back = expm(&(&l * c(dt, 0.0)))?;
    let err = max_abs_diff(&back, phi.matrix());
    if err > GENERATOR_ROUNDTRIP_TOL {
        return Err(Error::Eigen(format!(
            "generator round trip misses the channel by {err:e}"
        )));
    }
    Superoperator::from_matrix(phi.dim(), l)
}

/// Learned generator plus the qubit control term `-(g/2) Bx sigma_x ⊗ I_ER`.
#[derive(Clone, Debug)]
pub struct ControlledModel {
    generator: Superoperator,
    channel: Superoperator,
    d_s: usize,
    d_er: usize,
    dt: f64,
    g: f64,
}

impl ControlledModel {
    pub fn new(m: &EmbeddingModel, g: f64) -> Result<Self> {
        if m.d_s() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "control acts on a qubit, model has d_S = {}",
                m.d_s()
            )));
        }
        let channel = channel_superoperator(m)?;
        let generator = generator_from_channel(&channel, m.dt())?;
        Ok(Self {
            generator,
            channel,
            d_s: m.d_s(),
            d_er: m.d_er(),
            dt: m.dt(),
            g,
        })
    }

    pub fn dim(&self) -> usize {
        self.d_s * self.d_er
    }

    pub fn d_er(&self) -> usize {
        self.d_er
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn generator(&self) -> &Superoperator {
        &self.generator
    }

    pub fn channel(&self) -> &Superoperator {
        &self.channel
    }

    /// Superoperator of rho -> -i [-(g/2) Bx sigma_x ⊗ I_ER, rho].
    pub fn control_generator(&self, bx: f64) -> Superoperator {
        let hc = kron(&sigma_x(), &identity(self.d_er)) * c(-0.5 * self.g * bx, 0.0);
        Superoperator::commutator(&hc)
    }

    /// One-step propagator exp((M(L) + M(L_c(Bx))) dt). Zero control gives
    /// the learned channel itself.
    pub fn propagator(&self, bx: f64) -> Result<Superoperator> {
        if bx == 0.0 {
            return Ok(self.channel.clone());
        }
        let total = self.generator.matrix() + self.control_generator(bx).matrix();
        Superoperator::from_matrix(self.dim(), expm(&(total * c(self.dt, 0.0)))?)
    }
}

/// Hermitizes a propagated state and clips negative eigenvalues that exceed
/// the rollout tolerance, renormalizing the trace.
pub fn clean_state(rho: &ComplexMatrix, dims: Vec<usize>) -> Result<DensityMatrix> {
    let h = hermitize(rho);
    let eig = herm_eig(&h)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    let m = if min < -ROLLOUT_PSD_TOL {
        let clipped = eig.map(|l| c(l.max(0.0), 0.0));
        let tr = crate::linalg::trace(&clipped).re;
        if !(tr > 0.0) {
            return Err(Error::NotPositive(min));
        }
        clipped / c(tr, 0.0)
    } else {
        h
    };
    DensityMatrix::from_parts(m, dims)
}

/// Advances `rho0_S ⊗ rho_ER0` for `steps` steps, returning the states after
/// each step. With controls, step k uses the propagator for `controls[k]`.
pub fn model_rollout(
    m: &EmbeddingModel,
    rho0_s: &DensityMatrix,
    steps: usize,
    controls: Option<&[f64]>,
    g: f64,
) -> Result<Vec<DensityMatrix>> {
    let dims = vec![m.d_s(), m.d_er()];
    let mut rho = m.initial_state(rho0_s)?.into_matrix();
    let mut out = Vec::with_capacity(steps);
    match controls {
        None => {
            let channel = m.channel()?;
            for _ in 0..steps {
                rho = clean_state(&channel.apply(&rho), dims.clone())?.into_matrix();
                out.push(DensityMatrix::from_parts(rho.clone(), dims.clone())?);
            }
        }
        Some(bx) => {
            if bx.len() != steps {
                return Err(Error::DimensionMismatch(format!(
                    "{} controls for {steps} steps",
                    bx.len()
                )));
            }
            let cm = ControlledModel::new(m, g)?;
            let mut cache: Vec<(f64, Superoperator)> = Vec::new();
            for &b in bx {
                let idx = match cache.iter().position(|(v, _)| *v == b) {
                    Some(i) => i,
                    None => {
                        cache.push((b, cm.propagator(b)?));
                        cache.len() - 1
                    }
                };
                let next = unvec(&(cache[idx].1.matrix() * vec(&rho)))?;
                rho = clean_state(&next, dims.clone())?.into_matrix();
                out.push(DensityMatrix::from_parts(rho.clone(), dims.clone())?);
            }
        }
    }
    Ok(out)
}
