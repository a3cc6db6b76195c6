//! File formats for trajectories, models, policies and run outputs.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::control::{ActorCritic, EpisodeSummary, EpisodeTrace, EvalRecord};
use crate::error::{Error, Result};
use crate::learner::EmbeddingModel;
use crate::linalg::{c, ComplexMatrix, DensityMatrix, C64};
use crate::sim::{BlochVector, MeasurementBasis, MeasurementRecord, SystemParams, Trajectory};

/// Sidecar metadata path: `traj.csv` -> `traj.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// `out.csv` -> `out.<tag>.csv`.
pub fn tagged_path(path: &Path, tag: &str) -> PathBuf {
    path.with_extension(format!("{tag}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    Ok(w)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|v| [v.re, v.im]).collect()
}

fn row_major(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn from_row_major(v: &[[f64; 2]], d: usize, what: &str) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} entries, expected {}",
            v.len(),
            d * d
        )));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| c(v[i * d + j][0], v[i * d + j][1])))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryMeta {
    dt: f64,
    basis: Vec<Vec<[f64; 2]>>,
    seed: u64,
    params: Option<SystemParams>,
}

/// Writes `step,outcome,probability` rows and the metadata sidecar.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv_writer(path, &["step", "outcome", "probability"])?;
    for r in &traj.records {
        w.write_record(&[r.step.to_string(), r.outcome.to_string(), r.probability.to_string()])?;
    }
    w.flush()?;
    let meta = TrajectoryMeta {
        dt: traj.dt,
        basis: traj.basis.kets().iter().map(|k| pairs(k)).collect(),
        seed: traj.seed,
        params: traj.params.clone(),
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let meta: TrajectoryMeta = read_json(&sidecar_path(path))?;
    let kets = meta
        .basis
        .iter()
        .map(|k| k.iter().map(|p| c(p[0], p[1])).collect())
        .collect();
    let basis = MeasurementBasis::from_kets(kets)?;
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()? != vec!["step", "outcome", "probability"] {
        return Err(Error::InvalidParams(format!(
            "{}: expected header step,outcome,probability",
            path.display()
        )));
    }
    let records = rdr
        .deserialize::<MeasurementRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let traj = Trajectory {
        dt: meta.dt,
        basis,
        records,
        seed: meta.seed,
        params: meta.params,
    };
    traj.validate()?;
    Ok(traj)
}

/// Bloch vector before each measurement, `t,x,y,z`.
pub fn write_bloch(path: &Path, dt: f64, bloch: &[BlochVector]) -> Result<()> {
    let mut w = csv_writer(path, &["t", "x", "y", "z"])?;
    for (k, b) in bloch.iter().enumerate() {
        let t = (k + 1) as f64 * dt;
        w.write_record(&[t.to_string(), b.x.to_string(), b.y.to_string(), b.z.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "d_S")]
    d_s: usize,
    #[serde(rename = "d_ER")]
    d_er: usize,
    #[serde(rename = "d_A")]
    d_a: usize,
    dt: f64,
    #[serde(rename = "H")]
    h: Vec<[f64; 2]>,
    #[serde(rename = "rho_ER0")]
    rho_er0: Vec<[f64; 2]>,
    #[serde(rename = "rho_A")]
    rho_a: Vec<[f64; 2]>,
}

pub fn write_model(path: &Path, m: &EmbeddingModel) -> Result<()> {
    let file = ModelFile {
        d_s: m.d_s(),
        d_er: m.d_er(),
        d_a: m.d_a(),
        dt: m.dt(),
        h: row_major(m.hamiltonian()),
        rho_er0: row_major(m.rho_er0().matrix()),
        rho_a: row_major(m.rho_a().matrix()),
    };
    write_json(path, &file)
}

pub fn read_model(path: &Path) -> Result<EmbeddingModel> {
    let f: ModelFile = read_json(path)?;
    let total = f.d_s * f.d_er * f.d_a;
    let h = from_row_major(&f.h, total, "H")?;
    let rho_er0 = DensityMatrix::new(from_row_major(&f.rho_er0, f.d_er, "rho_ER0")?, vec![f.d_er])?;
    let rho_a = DensityMatrix::new(from_row_major(&f.rho_a, f.d_a, "rho_A")?, vec![f.d_a])?;
    EmbeddingModel::new(f.d_s, f.d_er, f.d_a, f.dt, h, rho_er0, rho_a)
}

/// `epoch,log_geo_mean_p`, epochs counted from 0.
pub fn write_curve(path: &Path, log_geo_mean: &[f64]) -> Result<()> {
    let mut w = csv_writer(path, &["epoch", "log_geo_mean_p"])?;
    for (e, v) in log_geo_mean.iter().enumerate() {
        w.write_record(&[e.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            r.get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidParams(format!("bad curve row {r:?}")))
        })
        .collect()
}

/// Policy file: the action levels it was trained for plus both networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub action_levels: Vec<f64>,
    pub agent: ActorCritic,
}

pub fn write_policy(path: &Path, policy: &PolicyFile) -> Result<()> {
    write_json(path, policy)
}

pub fn read_policy(path: &Path) -> Result<PolicyFile> {
    let p: PolicyFile = read_json(path)?;
    p.agent.validate()?;
    if p.agent.n_actions() != p.action_levels.len() {
        return Err(Error::InvalidParams(format!(
            "policy has {} outputs for {} action levels",
            p.agent.n_actions(),
            p.action_levels.len()
        )));
    }
    Ok(p)
}

/// `episode,steps,return,final_F,final_D`.
pub fn write_episodes(path: &Path, eps: &[EpisodeSummary]) -> Result<()> {
    let mut w = csv_writer(path, &["episode", "steps", "return", "final_F", "final_D"])?;
    for e in eps {
        w.write_record(&[
            e.episode.to_string(),
            e.steps.to_string(),
            e.ret.to_string(),
            e.final_fidelity.to_string(),
            e.final_separability.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step log of one episode, `step,Bx,F,D,r`.
pub fn write_steps(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    let mut w = csv_writer(path, &["step", "Bx", "F", "D", "r"])?;
    for s in &trace.steps {
        w.write_record(&[
            s.step.to_string(),
            s.bx.to_string(),
            s.fidelity.to_string(),
            s.separability.to_string(),
            s.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `episode,steps,return,final_F,final_D,purity,baseline_F`; the baseline
/// column is empty for model-mode evaluation.
pub fn write_metrics(path: &Path, recs: &[EvalRecord]) -> Result<()> {
    let mut w = csv_writer(
        path,
        &["episode", "steps", "return", "final_F", "final_D", "purity", "baseline_F"],
    )?;
    for r in recs {
        w.write_record(&[
            r.episode.to_string(),
            r.steps.to_string(),
            r.ret.to_string(),
            r.final_fidelity.to_string(),
            r.final_separability.to_string(),
            r.purity.to_string(),
            r.baseline_fidelity.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
