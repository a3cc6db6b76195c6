use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{featurize, score, ControlConfig, ControlEnv, Score, StopCause};
use super::net::{log_softmax_grad, softmax, Mlp};
use crate::error::{Error, Result};
use crate::linalg::{expm_unitary, DensityMatrix};
use crate::sim::{build_hamiltonian, conjugate, initial_joint_state, sample_categorical, SystemParams};

/// Policy and value networks with their SGD step sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorCritic {
    pub policy: Mlp,
    pub value: Mlp,
    pub lr_actor: f64,
    pub lr_critic: f64,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(
        n_features: usize,
        n_actions: usize,
        hidden: &[usize],
        lr_actor: f64,
        lr_critic: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = vec![n_features];
        p.extend_from_slice(hidden);
        let mut v = p.clone();
        p.push(n_actions);
        v.push(1);
        Self {
            policy: Mlp::init(&p, rng),
            value: Mlp::init(&v, rng),
            lr_actor,
            lr_critic,
        }
    }

    /// Networks with all weights zero: a uniform policy and V = 0.
    pub fn uniform(n_features: usize, n_actions: usize, hidden: &[usize]) -> Self {
        let mut p = vec![n_features];
        p.extend_from_slice(hidden);
        let mut v = p.clone();
        p.push(n_actions);
        v.push(1);
        Self {
            policy: Mlp::zeros(&p),
            value: Mlp::zeros(&v),
            lr_actor: 0.0,
            lr_critic: 0.0,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.value.validate()?;
        if self.value.output_dim() != 1 || self.policy.input_dim() != self.value.input_dim() {
            return Err(Error::InvalidParams(
                "value network must map the policy input to a scalar".into(),
            ));
        }
        Ok(())
    }

    pub fn action_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.policy.forward(x)?))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value.forward(x)?[0])
    }

    /// One online step: `w += a_w delta grad V(s)`,
    /// `theta += a_theta delta grad log pi(a|s)`.
    pub fn update(&mut self, x: &[f64], action: usize, delta: f64) -> Result<()> {
        if delta == 0.0 {
            return Ok(());
        }
        let vt = self.value.forward_tape(x)?;
        let gv = self.value.backward(&vt, &[1.0])?;
        let pt = self.policy.forward_tape(x)?;
        let probs = softmax(pt.output());
        let gp = self.policy.backward(&pt, &log_softmax_grad(&probs, action))?;
        self.value.add_scaled(&gv, self.lr_critic * delta);
        self.policy.add_scaled(&gp, self.lr_actor * delta);
        Ok(())
    }
}

/// Undiscounted TD error; terminal steps bootstrap from V = 0.
pub fn td_error(r: f64, v_now: f64, v_next: f64, terminal: bool) -> f64 {
    r + if terminal { 0.0 } else { v_next } - v_now
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Sample from the softmax policy.
    Sample,
    /// Take the most probable action (lowest index on ties).
    Greedy,
}

fn choose<R: Rng + ?Sized>(probs: &[f64], sel: Selection, rng: &mut R) -> usize {
    match sel {
        Selection::Sample => sample_categorical(probs, rng),
        Selection::Greedy => {
            let mut best = 0;
            for (k, p) in probs.iter().enumerate() {
                if *p > probs[best] {
                    best = k;
                }
            }
            best
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub action: usize,
    pub bx: f64,
    pub reward: f64,
    pub td_error: f64,
    pub fidelity: f64,
    pub separability: f64,
    pub features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<StepLog>,
    pub cause: StopCause,
    pub final_state: DensityMatrix,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn final_fidelity(&self) -> f64 {
        self.steps.last().map(|s| s.fidelity).unwrap_or(0.0)
    }

    pub fn final_separability(&self) -> f64 {
        self.steps.last().map(|s| s.separability).unwrap_or(1.0)
    }
}

/// Runs one episode on the learned model. With `learn`, the agent is updated
/// online after every step.
pub fn run_episode<R: Rng + ?Sized>(
    env: &ControlEnv,
    agent: &mut ActorCritic,
    sel: Selection,
    learn: bool,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    if agent.n_actions() != env.n_actions() {
        return Err(Error::DimensionMismatch(format!(
            "policy has {} actions, environment {}",
            agent.n_actions(),
            env.n_actions()
        )));
    }
    let bound = env.horizon() as f64;
    let mut rho = env.reset();
    let mut x = featurize(rho.matrix());
    let mut steps = Vec::with_capacity(env.horizon());
    for t in 1..=env.horizon() {
        let probs = agent.action_probs(&x)?;
        let a = choose(&probs, sel, rng);
        let tr = env.step(&rho, a, t)?;
        let x_next = featurize(tr.state.matrix());
        let terminal = tr.done.is_some();
        // values of an undiscounted all-negative return live in [-T, 0]
        let v_now = agent.value(&x)?.clamp(-bound, 0.0);
        let v_next = if terminal { 0.0 } else { agent.value(&x_next)?.clamp(-bound, 0.0) };
        let delta = td_error(tr.score.reward, v_now, v_next, terminal);
        if !delta.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite TD error at step {t}")));
        }
        if learn {
            agent.update(&x, a, delta)?;
        }
        steps.push(StepLog {
            step: t,
            action: a,
            bx: env.levels()[a],
            reward: tr.score.reward,
            td_error: delta,
            fidelity: tr.score.fidelity,
            separability: tr.score.separability,
            features: std::mem::replace(&mut x, x_next),
        });
        rho = tr.state;
        if let Some(cause) = tr.done {
            return Ok(EpisodeTrace {
                steps,
                cause,
                final_state: rho,
            });
        }
    }
    unreachable!("the environment always stops at the horizon")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
    pub final_fidelity: f64,
    pub final_separability: f64,
}

impl EpisodeSummary {
    fn of(episode: usize, tr: &EpisodeTrace) -> Self {
        Self {
            episode,
            steps: tr.len(),
            ret: tr.total_return(),
            final_fidelity: tr.final_fidelity(),
            final_separability: tr.final_separability(),
        }
    }
}

/// Online actor-critic training for `cfg.episodes` episodes, seeded by
/// `cfg.seed`. Returns the trained agent and one summary per episode.
pub fn train_controller(env: &ControlEnv, cfg: &ControlConfig) -> Result<(ActorCritic, Vec<EpisodeSummary>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agent = ActorCritic::new(
        env.n_features(),
        env.n_actions(),
        &cfg.hidden,
        cfg.lr_actor,
        cfg.lr_critic,
        &mut rng,
    );
    let curve = continue_training(env, &mut agent, cfg.episodes, &mut rng)?;
    Ok((agent, curve))
}

pub fn continue_training<R: Rng + ?Sized>(
    env: &ControlEnv,
    agent: &mut ActorCritic,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<EpisodeSummary>> {
    (0..episodes)
        .map(|e| {
            let tr = run_episode(env, agent, Selection::Sample, true, rng)?;
            Ok(EpisodeSummary::of(e, &tr))
        })
        .collect()
}

/// Outcome of one evaluation episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
    /// Model fidelity and separability at the last step.
    pub final_fidelity: f64,
    pub final_separability: f64,
    /// Purity of the reduced system state at the last step.
    pub purity: f64,
    /// Set when replayed on the simulator: true reduced fidelity with no
    /// control applied over the same number of steps.
    pub baseline_fidelity: Option<f64>,
    pub actions: Vec<usize>,
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

/// Runs `episodes` evaluation episodes on the learned model, fanning out over
/// `jobs` threads. Records are ordered by episode index.
pub fn evaluate_model(
    env: &ControlEnv,
    agent: &ActorCritic,
    sel: Selection,
    episodes: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<EvalRecord>> {
    parallel_episodes(episodes, jobs, |e| {
        let mut a = agent.clone();
        let tr = run_episode(env, &mut a, sel, false, &mut episode_rng(seed, e))?;
        let sys = tr.final_state.partial_trace(0)?;
        Ok(EvalRecord {
            episode: e,
            steps: tr.len(),
            ret: tr.total_return(),
            final_fidelity: tr.final_fidelity(),
            final_separability: tr.final_separability(),
            purity: sys.purity(),
            baseline_fidelity: None,
            actions: tr.actions(),
        })
    })
}

/// Scores of the true joint state after each control step when `actions`
/// are replayed on the spin-boson simulator from its initial state.
pub fn true_replay(
    p: &SystemParams,
    dt: f64,
    levels: &[f64],
    actions: &[usize],
    target: &DensityMatrix,
) -> Result<Vec<Score>> {
    let props = levels
        .iter()
        .map(|&bx| expm_unitary(&build_hamiltonian(p, bx), dt))
        .collect::<Result<Vec<_>>>()?;
    let mut rho = initial_joint_state(p);
    actions
        .iter()
        .map(|&a| {
            let u = props.get(a).ok_or_else(|| {
                Error::InvalidParams(format!("action {a} outside {} levels", levels.len()))
            })?;
            rho = conjugate(&rho, u)?;
            score(&rho, target)
        })
        .collect()
}

/// Plans each episode on the learned model and replays the chosen Bx
/// sequence on the spin-boson simulator with its real bath. Reported
/// fidelity, separability and purity are those of the true joint state;
/// the return is the model's.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_true(
    env: &ControlEnv,
    agent: &ActorCritic,
    p: &SystemParams,
    dt: f64,
    sel: Selection,
    episodes: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<EvalRecord>> {
    p.validate()?;
    let props = env
        .levels()
        .iter()
        .map(|&bx| expm_unitary(&build_hamiltonian(p, bx), dt))
        .collect::<Result<Vec<_>>>()?;
    let free = expm_unitary(&build_hamiltonian(p, 0.0), dt)?;
    parallel_episodes(episodes, jobs, |e| {
        let mut a = agent.clone();
        let tr = run_episode(env, &mut a, sel, false, &mut episode_rng(seed, e))?;
        let start = initial_joint_state(p);
        let mut rho = start.clone();
        let mut idle = start;
        for s in &tr.steps {
            rho = conjugate(&rho, &props[s.action])?;
            idle = conjugate(&idle, &free)?;
        }
        let sc = score(&rho, env.target())?;
        let base = score(&idle, env.target())?;
        Ok(EvalRecord {
            episode: e,
            steps: tr.len(),
            ret: tr.total_return(),
            final_fidelity: sc.fidelity,
            final_separability: sc.separability,
            purity: rho.partial_trace(0)?.purity(),
            baseline_fidelity: Some(base.fidelity),
            actions: tr.actions(),
        })
    })
}

fn parallel_episodes<F>(episodes: usize, jobs: usize, run: F) -> Result<Vec<EvalRecord>>
where
    F: Fn(usize) -> Result<EvalRecord> + Sync,
{
    let jobs = jobs.max(1).min(episodes.max(1));
    if jobs == 1 {
        return (0..episodes).map(&run).collect();
    }
    let mut slots: Vec<Option<Result<EvalRecord>>> = (0..episodes).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = episodes.div_ceil(jobs);
        for (c, out) in slots.chunks_mut(chunk).enumerate() {
            let run = &run;
            scope.spawn(move || {
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = Some(run(c * chunk + k));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every episode ran")).collect()
}
