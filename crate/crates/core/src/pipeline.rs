//! The four pipeline stages behind the command-line interface.

use std::path::Path;

use crate::config::{derive_seed, RunConfig, SeedStream};
use crate::control::{
    evaluate_model, evaluate_true, run_episode, train_controller, true_replay, ActorCritic,
    ControlConfig, ControlEnv, EpisodeSummary, EvalRecord, StepLog,
};
use crate::error::{Error, Result};
use crate::io::{self, PolicyFile};
use crate::learner::{train, EmbeddingModel, TrainReport};
use crate::linalg::DensityMatrix;
use crate::sim::{generate_trajectory_traced, Trajectory, EXCITED};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Model,
    True,
}

/// Generates the measurement dataset and writes it with its Bloch trace.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Trajectory> {
    let l = &cfg.learning;
    let seed = derive_seed(l.seed, SeedStream::Simulator);
    let (traj, bloch) = generate_trajectory_traced(&cfg.system, l.n_measurements, l.dt, &cfg.basis()?, seed)?;
    io::write_trajectory(out, &traj)?;
    io::write_bloch(&io::tagged_path(out, "bloch"), l.dt, &bloch)?;
    Ok(traj)
}

/// Fresh model for the configured reservoir dimension.
pub fn initial_model(cfg: &RunConfig) -> Result<EmbeddingModel> {
    let l = &cfg.learning;
    EmbeddingModel::init(2, l.d_er, l.dt, derive_seed(l.seed, SeedStream::ModelInit))
}

/// Trains on the trajectory at `data`, writing the model and its curve.
pub fn learn(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(EmbeddingModel, TrainReport)> {
    let traj = io::read_trajectory(data)?;
    if (traj.dt - cfg.learning.dt).abs() > 1e-12 * cfg.learning.dt {
        return Err(Error::Config(format!(
            "trajectory dt {} differs from learning.dt {}",
            traj.dt, cfg.learning.dt
        )));
    }
    let rho0 = DensityMatrix::basis_state(2, EXCITED);
    let (model, report) = train(&initial_model(cfg)?, &traj, &rho0, &cfg.train_options())?;
    io::write_model(out, &model)?;
    io::write_curve(&io::tagged_path(out, "curve"), &report.log_geo_mean)?;
    Ok((model, report))
}

/// Trains the controller on the saved model, writing the policy and the
/// per-episode learning curve.
pub fn control(cfg: &RunConfig, model: &Path, out: &Path) -> Result<(ActorCritic, Vec<EpisodeSummary>)> {
    let m = io::read_model(model)?;
    let ccfg = cfg.control_config()?;
    let env = ControlEnv::new(&m, cfg.system.g, &ccfg)?;
    let (agent, curve) = train_controller(&env, &ccfg)?;
    io::write_policy(
        out,
        &PolicyFile {
            action_levels: ccfg.action_levels.clone(),
            agent: agent.clone(),
        },
    )?;
    io::write_episodes(&io::tagged_path(out, "curve"), &curve)?;
    Ok((agent, curve))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_final_fidelity: f64,
    pub mean_final_fd: f64,
    pub mean_steps: f64,
}

impl EvalSummary {
    pub fn of(recs: &[EvalRecord]) -> Self {
        let n = recs.len().max(1) as f64;
        Self {
            episodes: recs.len(),
            mean_final_fidelity: recs.iter().map(|r| r.final_fidelity).sum::<f64>() / n,
            mean_final_fd: recs.iter().map(|r| r.final_fidelity * r.final_separability).sum::<f64>() / n,
            mean_steps: recs.iter().map(|r| r.steps as f64).sum::<f64>() / n,
        }
    }
}

impl std::fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "episodes={} mean_final_F={:.6} mean_final_FD={:.6} mean_steps={:.2}",
            self.episodes, self.mean_final_fidelity, self.mean_final_fd, self.mean_steps
        )
    }
}

/// Evaluates a saved policy, writing per-episode metrics and the per-step
/// log of episode 0.
pub fn evaluate(
    cfg: &RunConfig,
    policy: &Path,
    model: &Path,
    mode: EvalMode,
    out: &Path,
    jobs: usize,
) -> Result<(Vec<EvalRecord>, EvalSummary)> {
    let m = io::read_model(model)?;
    let pf = io::read_policy(policy)?;
    let ccfg = ControlConfig {
        action_levels: pf.action_levels.clone(),
        ..cfg.control_config()?
    };
    let env = ControlEnv::new(&m, cfg.system.g, &ccfg)?;
    if pf.agent.policy.input_dim() != env.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "policy expects {} features, model state gives {}",
            pf.agent.policy.input_dim(),
            env.n_features()
        )));
    }
    let sel = cfg.control.eval_policy;
    let n = cfg.control.eval_episodes;
    let seed = cfg.control.seed;
    let recs = match mode {
        EvalMode::Model => evaluate_model(&env, &pf.agent, sel, n, seed, jobs)?,
        EvalMode::True => evaluate_true(&env, &pf.agent, &cfg.system, m.dt(), sel, n, seed, jobs)?,
    };
    io::write_metrics(out, &recs)?;

    if n > 0 {
        let mut agent = pf.agent.clone();
        let mut rng = episode_zero_rng(seed);
        let mut trace = run_episode(&env, &mut agent, sel, false, &mut rng)?;
        if mode == EvalMode::True {
            let scores = true_replay(&cfg.system, m.dt(), env.levels(), &trace.actions(), env.target())?;
            for (s, sc) in trace.steps.iter_mut().zip(scores) {
                *s = StepLog {
                    fidelity: sc.fidelity,
                    separability: sc.separability,
                    reward: sc.reward,
                    ..s.clone()
                };
            }
        }
        io::write_steps(&io::tagged_path(out, "steps"), &trace)?;
    }
    let summary = EvalSummary::of(&recs);
    Ok((recs, summary))
}

fn episode_zero_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}
