use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::control::{levels, ControlConfig, Selection};
use crate::error::{Error, Result};
use crate::learner::{AdamConfig, TrainOptions};
use crate::linalg::{c, ComplexMatrix, DensityMatrix};
use crate::sim::{MeasurementBasis, SystemParams, EXCITED, GROUND};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemParams,
    pub learning: LearningConfig,
    pub control: ControlSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub d_er: usize,
    pub dt: f64,
    pub n_measurements: usize,
    pub basis: String,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub window: usize,
    pub tol: f64,
    /// Train on consecutive windows of this many records (off when null).
    pub segment_length: Option<usize>,
    pub seed: u64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            d_er: 2,
            dt: 0.2,
            n_measurements: 10_000,
            basis: "x".into(),
            adam: AdamConfig::default(),
            max_epochs: 2000,
            window: 50,
            tol: 1e-6,
            segment_length: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Ground,
    Excited,
    /// Row-major density matrix entries as [re, im] pairs.
    Custom(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    /// Explicit Bx levels; when null, `n_levels` values over [-max_field, max_field].
    pub action_levels: Option<Vec<f64>>,
    pub n_levels: usize,
    /// Defaults to the system's B0 when null.
    pub max_field: Option<f64>,
    pub horizon: usize,
    pub alpha: f64,
    pub episodes: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub target: Target,
    pub eval_episodes: usize,
    pub eval_policy: Selection,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            action_levels: None,
            n_levels: 9,
            max_field: None,
            horizon: 50,
            alpha: -0.01,
            episodes: 1000,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            hidden: vec![64, 64],
            seed: 0,
            target: Target::Ground,
            eval_episodes: 1,
            eval_policy: Selection::Greedy,
        }
    }
}

/// Independent streams derived from the learning seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedStream {
    Simulator = 1,
    ModelInit = 2,
}

pub fn derive_seed(seed: u64, stream: SeedStream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.next_u64()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.system.validate().map_err(cfg_err)?;
        let l = &self.learning;
        if l.d_er == 0 {
            return Err(Error::Config("learning.d_er must be >= 1".into()));
        }
        if !(l.dt > 0.0) {
            return Err(Error::Config(format!("learning.dt must be positive, got {}", l.dt)));
        }
        if l.n_measurements == 0 {
            return Err(Error::Config("learning.n_measurements must be >= 1".into()));
        }
        if l.segment_length == Some(0) {
            return Err(Error::Config("learning.segment_length must be >= 1".into()));
        }
        self.basis()?;
        self.control_config()?.validate()
    }

    pub fn basis(&self) -> Result<MeasurementBasis> {
        MeasurementBasis::named(&self.learning.basis).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn train_options(&self) -> TrainOptions {
        let l = &self.learning;
        TrainOptions {
            adam: l.adam,
            max_epochs: l.max_epochs,
            window: l.window,
            tol: l.tol,
            segment_len: l.segment_length,
        }
    }

    pub fn target(&self) -> Result<DensityMatrix> {
        match &self.control.target {
            Target::Ground => Ok(DensityMatrix::basis_state(2, GROUND)),
            Target::Excited => Ok(DensityMatrix::basis_state(2, EXCITED)),
            Target::Custom(rows) => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config("custom target must be a square matrix".into()));
                }
                let m = ComplexMatrix::from_fn(d, d, |i, j| c(rows[i][j][0], rows[i][j][1]));
                DensityMatrix::new(m, vec![d]).map_err(|e| Error::Config(format!("custom target: {e}")))
            }
        }
    }

    pub fn control_config(&self) -> Result<ControlConfig> {
        let s = &self.control;
        let action_levels = match &s.action_levels {
            Some(v) => v.clone(),
            None => levels(s.n_levels, s.max_field.unwrap_or(self.system.b0)),
        };
        let cfg = ControlConfig {
            action_levels,
            horizon: s.horizon,
            alpha: s.alpha,
            target: self.target()?,
            episodes: s.episodes,
            seed: s.seed,
            lr_actor: s.lr_actor,
            lr_critic: s.lr_critic,
            hidden: s.hidden.clone(),
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.control_config().unwrap().action_levels.len(), 9);
    }

    #[test]
    fn round_trips() {
        let mut cfg = RunConfig::default();
        cfg.learning.adam.lr = 0.0123456789;
        cfg.control.target = Target::Custom(vec![vec![[0.5, 0.0], [0.0, 0.5]], vec![[0.0, -0.5], [0.5, 0.0]]]);
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_json(r#"{"learning": {"lr": 0.1}}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = RunConfig::from_json(r#"{"sytem": {}}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for doc in [
            r#"{"learning": {"basis": "w"}}"#,
            r#"{"control": {"alpha": 0.5}}"#,
            r#"{"system": {"n_fock": 1}}"#,
            r#"{"control": {"action_levels": [0.0, 1.0]}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(doc), Err(Error::Config(_))), "{doc}");
        }
    }

    #[test]
    fn seed_streams_differ() {
        let a = derive_seed(7, SeedStream::Simulator);
        let b = derive_seed(7, SeedStream::ModelInit);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, SeedStream::Simulator));
    }
}
