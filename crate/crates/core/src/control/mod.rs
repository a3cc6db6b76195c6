//! Actor-critic steering of the learned model's system state.

mod agent;
mod env;
mod net;

pub use agent::{
    continue_training, evaluate_model, evaluate_true, run_episode, td_error, train_controller, true_replay,
    ActorCritic, EpisodeSummary, EpisodeTrace, EvalRecord, Selection, StepLog,
};
pub use env::{
    featurize, levels, product_state, reward, score, unfeaturize, ControlConfig, ControlEnv, Score,
    StopCause, Transition,
};
pub use net::{log_softmax_grad, softmax, Layer, Mlp, Tape};
