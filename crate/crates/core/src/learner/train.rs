use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::gradient::grad_log_prob;
use super::likelihood::forward_backward;
use super::model::EmbeddingModel;
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::sim::Trajectory;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Number of trailing epochs inspected by the stopping rule.
    pub window: usize,
    /// Stop once max - min of log p^(1/n) over the window is below this.
    pub tol: f64,
    /// Train on consecutive windows of this many records instead of the
    /// full sequence, cycling one window per epoch.
    pub segment_len: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            max_epochs: 2000,
            window: 50,
            tol: 1e-6,
            segment_len: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// log p^(1/n) at the parameters evaluated in each epoch.
    pub log_geo_mean: Vec<f64>,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    /// p^(1/n) per epoch.
    pub fn geo_mean(&self) -> Vec<f64> {
        self.log_geo_mean.iter().map(|l| l.exp()).collect()
    }

    /// Spread of the last `window` curve values, if that many exist.
    pub fn window_variation(&self, window: usize) -> Option<f64> {
        if window == 0 || self.log_geo_mean.len() < window {
            return None;
        }
        let tail = &self.log_geo_mean[self.log_geo_mean.len() - window..];
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(max - min)
    }
}

/// Training data for one epoch: the initial system state and the records.
fn epoch_data<'a>(
    epoch: usize,
    traj: &'a Trajectory,
    rho0_s: &DensityMatrix,
    segment: Option<usize>,
    segments: &'a [Trajectory],
) -> (DensityMatrix, &'a Trajectory) {
    match segment {
        None => (rho0_s.clone(), traj),
        Some(len) => {
            let w = epoch % segments.len();
            let start = if w == 0 {
                rho0_s.clone()
            } else {
                // a window starts right after the previous measurement
                let prev = traj.records[w * len - 1].outcome;
                let m = traj.basis.projector(prev);
                DensityMatrix::from_parts(m, vec![traj.basis.dim()]).expect("square")
            };
            (start, &segments[w])
        }
    }
}

/// Maximizes log p over the Hermitian dilation generator with ADAM.
///
/// Each epoch evaluates the likelihood at the current parameters, records
/// log p^(1/n), checks the stopping rule and then takes one ascent step. The
/// returned model is the one whose likelihood was recorded last.
pub fn train(
    model: &EmbeddingModel,
    traj: &Trajectory,
    rho0_s: &DensityMatrix,
    opts: &TrainOptions,
) -> Result<(EmbeddingModel, TrainReport)> {
    if traj.is_empty() {
        return Err(Error::InvalidParams("cannot train on an empty trajectory".into()));
    }
    if (traj.dt - model.dt()).abs() > 1e-12 * model.dt().abs().max(1.0) {
        return Err(Error::InvalidParams(format!(
            "trajectory dt {} does not match model dt {}",
            traj.dt,
            model.dt()
        )));
    }
    let segments: Vec<Trajectory> = match opts.segment_len {
        Some(0) => return Err(Error::InvalidParams("segment length must be >= 1".into())),
        Some(len) => (0..traj.len()).step_by(len).map(|s| traj.slice(s, len)).collect(),
        None => Vec::new(),
    };

    let mut current = model.clone();
    let mut theta = current.params();
    let mut adam = AdamState::new(opts.adam, theta.len());
    let mut curve = Vec::with_capacity(opts.max_epochs);
    let mut stop = StopReason::MaxEpochs;

    for epoch in 0..opts.max_epochs {
        let (start, data) = epoch_data(epoch, traj, rho0_s, opts.segment_len, &segments);
        let cache = forward_backward(&current, &start, data)?;
        curve.push(cache.log_geo_mean());

        if opts.window > 0 && curve.len() >= opts.window {
            let tail = &curve[curve.len() - opts.window..];
            let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            if max - min < opts.tol {
                stop = StopReason::Converged;
                break;
            }
        }
        if epoch + 1 == opts.max_epochs {
            break;
        }
        let grad = grad_log_prob(&current, &cache, data)?;
        adam.ascend(&mut theta, &grad);
        current.set_params(&theta)?;
    }

    let report = TrainReport {
        epochs_run: curve.len(),
        log_geo_mean: curve,
        stop_reason: stop,
    };
    Ok((current, report))
}
