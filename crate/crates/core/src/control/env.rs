use crate::error::{Error, Result};
use crate::learner::{clean_state, ControlledModel, EmbeddingModel};
use crate::linalg::{c, kron, unvec, vec, ComplexMatrix, DensityMatrix, Superoperator};
use crate::sim::{fidelity, separability, GROUND};

#[derive(Clone, Debug, PartialEq)]
pub struct ControlConfig {
    /// Bx values available to the agent, one per action index.
    pub action_levels: Vec<f64>,
    /// Episode length T in control steps.
    pub horizon: usize,
    /// An episode ends early once the reward exceeds this.
    pub alpha: f64,
    pub target: DensityMatrix,
    pub episodes: usize,
    pub seed: u64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub hidden: Vec<usize>,
}

impl ControlConfig {
    /// Nine levels evenly spaced over [-B0, B0], T = 50, alpha = -0.01,
    /// target |g><g|.
    pub fn with_field(b0: f64) -> Self {
        Self {
            action_levels: levels(9, b0),
            horizon: 50,
            alpha: -0.01,
            target: DensityMatrix::basis_state(2, GROUND),
            episodes: 1000,
            seed: 0,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            hidden: vec![64, 64],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.action_levels.len();
        if n == 0 {
            return Err(Error::Config("action_levels must not be empty".into()));
        }
        let scale = self.action_levels.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut sorted = self.action_levels.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        if (0..n).any(|k| (sorted[k] + sorted[n - 1 - k]).abs() > 1e-12 * scale) {
            return Err(Error::Config(format!(
                "action_levels must be symmetric about 0: {:?}",
                self.action_levels
            )));
        }
        if !(self.alpha > -1.0 && self.alpha < 0.0) {
            return Err(Error::Config(format!("alpha must lie in (-1, 0), got {}", self.alpha)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be >= 1".into()));
        }
        self.target.validate()
    }
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self::with_field(1.0)
    }
}

/// `count` values evenly spaced over [-max, max].
pub fn levels(count: usize, max: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|k| -max + 2.0 * max * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Real parts of all entries (row-major) followed by the imaginary parts.
pub fn featurize(rho: &ComplexMatrix) -> Vec<f64> {
    let d = rho.nrows();
    let mut out = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(rho[(i, j)].re);
        }
    }
    for i in 0..d {
        for j in 0..d {
            out.push(rho[(i, j)].im);
        }
    }
    out
}

pub fn unfeaturize(x: &[f64]) -> Result<ComplexMatrix> {
    let half = x.len() / 2;
    let d = (half as f64).sqrt().round() as usize;
    if !x.len().is_multiple_of(2) || d * d != half {
        return Err(Error::NotSquareLength(x.len()));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| c(x[i * d + j], x[half + i * d + j])))
}

/// Fidelity of the system marginal to the target, separability of the
/// joint state, and the reward F * D - 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub fidelity: f64,
    pub separability: f64,
    pub reward: f64,
}

pub fn score(rho: &DensityMatrix, target: &DensityMatrix) -> Result<Score> {
    let sys = rho.partial_trace(0)?;
    if sys.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target on dim {}, system on dim {}",
            target.dim(),
            sys.dim()
        )));
    }
    let f = fidelity(sys.matrix(), target.matrix())?;
    let d = separability(rho)?;
    Ok(Score {
        fidelity: f,
        separability: d,
        reward: f * d - 1.0,
    })
}

pub fn reward(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    Ok(score(rho, target)?.reward)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCause {
    /// Reward exceeded alpha.
    Reached,
    /// Horizon T used up.
    Horizon,
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub state: DensityMatrix,
    pub score: Score,
    pub done: Option<StopCause>,
}

/// Learned-model environment with one precomputed propagator per action.
#[derive(Clone, Debug)]
pub struct ControlEnv {
    propagators: Vec<Superoperator>,
    levels: Vec<f64>,
    initial: DensityMatrix,
    target: DensityMatrix,
    horizon: usize,
    alpha: f64,
}

impl ControlEnv {
    /// Episodes start from |e><e| ⊗ rho_ER0.
    pub fn new(m: &EmbeddingModel, g: f64, cfg: &ControlConfig) -> Result<Self> {
        cfg.validate()?;
        let cm = ControlledModel::new(m, g)?;
        let propagators = cfg
            .action_levels
            .iter()
            .map(|&bx| cm.propagator(bx))
            .collect::<Result<Vec<_>>>()?;
        let initial = m.initial_state(&DensityMatrix::basis_state(2, crate::sim::EXCITED))?;
        Ok(Self {
            propagators,
            levels: cfg.action_levels.clone(),
            initial,
            target: cfg.target.clone(),
            horizon: cfg.horizon,
            alpha: cfg.alpha,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target(&self) -> &DensityMatrix {
        &self.target
    }

    pub fn n_features(&self) -> usize {
        2 * self.initial.dim() * self.initial.dim()
    }

    pub fn reset(&self) -> DensityMatrix {
        self.initial.clone()
    }

    /// Applies action `a` as step number `t` (1-based) of an episode.
    pub fn step(&self, rho: &DensityMatrix, a: usize, t: usize) -> Result<Transition> {
        let prop = self.propagators.get(a).ok_or_else(|| {
            Error::InvalidParams(format!("action {a} outside {} levels", self.levels.len()))
        })?;
        let next = unvec(&(prop.matrix() * vec(rho.matrix())))?;
        let state = clean_state(&next, rho.dims().to_vec())?;
        let score = score(&state, &self.target)?;
        let done = if score.reward > self.alpha {
            Some(StopCause::Reached)
        } else if t >= self.horizon {
            Some(StopCause::Horizon)
        } else {
            None
        };
        Ok(Transition { state, score, done })
    }
}

/// Product state rho_S ⊗ rho_ER as a joint density matrix.
pub fn product_state(sys: &DensityMatrix, er: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_parts(kron(sys.matrix(), er.matrix()), vec![sys.dim(), er.dim()])
        .expect("product of valid states")
}
