//! Effective-reservoir learning from a measurement record.

mod adam;
mod dynamics;
mod gradient;
mod likelihood;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use dynamics::{
    channel_superoperator, clean_state, generator, generator_from_channel, model_rollout,
    ControlledModel, GENERATOR_ROUNDTRIP_TOL, ROLLOUT_PSD_TOL,
};
pub use gradient::{
    assemble_hermitian_gradient, degeneracy_threshold, frechet_coeffs, grad_log_prob, grad_matrix,
};
pub use likelihood::{
    conditional_probs, forward_backward, log_prob, normalization_error, sample_trajectory,
    LikelihoodCache, MIN_CONDITIONAL_PROB,
};
pub use model::{
    diag_param_index, hermitian_to_params, offdiag_param_index, params_to_hermitian, Channel,
    EmbeddingModel, INIT_SCALE,
};
pub use train::{train, StopReason, TrainOptions, TrainReport};
