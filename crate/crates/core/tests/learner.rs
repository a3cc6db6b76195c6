mod common;

use common::*;
use qembed::learner::{
    conditional_probs, forward_backward, grad_log_prob, log_prob, normalization_error,
    sample_trajectory, train, AdamConfig, EmbeddingModel, StopReason, TrainOptions,
};
use qembed::linalg::{
    c, expm_unitary, herm_eig, identity, kron, max_abs_diff, random, sigma_x, sigma_z, trace,
    ComplexMatrix, DensityMatrix,
};
use qembed::sim::{build_hamiltonian, generate_trajectory, thermal_bath, MeasurementBasis, SystemParams};
use qembed::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn excited() -> DensityMatrix {
    DensityMatrix::basis_state(2, 0)
}

fn degenerate_model(d_er: usize, seed: u64) -> EmbeddingModel {
    let base = EmbeddingModel::init(2, d_er, 0.2, seed).unwrap();
    let n = base.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
    let v = random::unitary(n, &mut rng);
    let mut spectrum = vec![1.0, 1.0, 2.0, 3.0];
    spectrum.extend((4..n).map(|k| 0.25 * k as f64));
    let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        spectrum.iter().map(|&l| c(l, 0.0)),
    ));
    base.with_hamiltonian(&v * d * v.adjoint()).unwrap()
}

#[test]
fn log_prob_matches_unnormalized_product() {
    for (d_er, seed) in [(1, 1), (2, 2), (3, 3)] {
        let m = EmbeddingModel::init(2, d_er, 0.2, seed).unwrap();
        let traj = random_trajectory(20, MeasurementBasis::x(), 0.2, seed + 10);
        let fast = log_prob(&m, &excited(), &traj).unwrap();
        let slow = naive_prob(&m, excited().matrix(), &traj).ln();
        assert!((fast - slow).abs() < 1e-10, "d_ER={d_er}: {fast} vs {slow}");
    }
}

#[test]
fn gradient_matches_forward_mode_oracle() {
    for (d_er, seed) in [(1, 4), (2, 5)] {
        let m = EmbeddingModel::init(2, d_er, 0.2, seed).unwrap();
        let traj = random_trajectory(20, MeasurementBasis::x(), 0.2, seed + 10);
        let cache = forward_backward(&m, &excited(), &traj).unwrap();
        let fast = grad_log_prob(&m, &cache, &traj).unwrap();
        let slow = naive_grad(&m, excited().matrix(), &traj);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "d_ER={d_er}: {err:e}");
    }
}

fn fd_error(m: &EmbeddingModel, traj: &qembed::sim::Trajectory) -> f64 {
    let cache = forward_backward(m, &excited(), traj).unwrap();
    let analytic = grad_log_prob(m, &cache, traj).unwrap();
    let numeric = central_diff(&m.params(), 1e-5, |theta| {
        let mut probe = m.clone();
        probe.set_params(theta).unwrap();
        log_prob(&probe, &excited(), traj).unwrap()
    });
    rel_err(&analytic, &numeric)
}

#[test]
fn gradient_matches_finite_differences() {
    let m = EmbeddingModel::init(2, 1, 0.2, 7).unwrap();
    let traj = random_trajectory(8, MeasurementBasis::x(), 0.2, 8);
    assert!(fd_error(&m, &traj) < 1e-5);
}

#[test]
fn gradient_matches_finite_differences_at_degenerate_spectrum() {
    let m = degenerate_model(1, 9);
    let eig = herm_eig(m.hamiltonian()).unwrap();
    assert!((eig.values[0] - eig.values[1]).abs() < 1e-12);
    let traj = random_trajectory(8, MeasurementBasis::y(), 0.2, 10);
    assert!(fd_error(&m, &traj) < 1e-5);
}

#[test]
fn normalized_scans_satisfy_trace_identity() {
    let m = EmbeddingModel::init(2, 2, 0.2, 11).unwrap();
    let traj = random_trajectory(200, MeasurementBasis::x(), 0.2, 12);
    let cache = forward_backward(&m, &excited(), &traj).unwrap();
    assert!(normalization_error(&cache) < 1e-8);
    for rho in &cache.forward {
        assert!((trace(rho).re - 1.0).abs() < 1e-10);
    }
    let sum: f64 = cache.cond_probs.iter().map(|p| p.ln()).sum();
    assert!((cache.log_p - sum).abs() < 1e-12);
}

#[test]
fn long_sequences_do_not_underflow() {
    let m = EmbeddingModel::init(2, 2, 0.2, 13).unwrap();
    let traj = random_trajectory(20_000, MeasurementBasis::x(), 0.2, 14);
    let lp = log_prob(&m, &excited(), &traj).unwrap();
    assert!(lp.is_finite() && lp < -1000.0);
}

#[test]
fn identity_channel_on_consistent_outcomes() {
    let m = EmbeddingModel::closed_system(&ComplexMatrix::zeros(2, 2), 1, 0.2).unwrap();
    let mut traj = random_trajectory(10, MeasurementBasis::z(), 0.2, 0);
    traj.records.iter_mut().for_each(|r| r.outcome = 0);
    let cache = forward_backward(&m, &excited(), &traj).unwrap();
    assert!(cache.cond_probs.iter().all(|&p| (p - 1.0).abs() < 1e-14));
    assert!(cache.log_p.abs() < 1e-14);
    let grad = grad_log_prob(&m, &cache, &traj).unwrap();
    assert!(grad.iter().all(|g| g.abs() < 1e-12));
    // stationarity seen by finite differences too
    let numeric = central_diff(&m.params(), 1e-5, |theta| {
        let mut probe = m.clone();
        probe.set_params(theta).unwrap();
        log_prob(&probe, &excited(), &traj).unwrap()
    });
    assert!(numeric.iter().all(|g| g.abs() < 1e-8));
}

#[test]
fn impossible_outcome_reports_its_step() {
    let m = EmbeddingModel::closed_system(&ComplexMatrix::zeros(2, 2), 1, 0.2).unwrap();
    let mut traj = random_trajectory(6, MeasurementBasis::z(), 0.2, 0);
    traj.records.iter_mut().for_each(|r| r.outcome = 0);
    traj.records[3].outcome = 1;
    match log_prob(&m, &excited(), &traj) {
        Err(Error::ImpossibleSequence { step, .. }) => assert_eq!(step, 4),
        other => panic!("expected impossible sequence, got {other:?}"),
    }
}

#[test]
fn global_phase_direction_has_zero_derivative() {
    let m = EmbeddingModel::init(2, 2, 0.2, 15).unwrap();
    let traj = random_trajectory(30, MeasurementBasis::x(), 0.2, 16);
    let cache = forward_backward(&m, &excited(), &traj).unwrap();
    let grad = grad_log_prob(&m, &cache, &traj).unwrap();
    let along_identity: f64 = grad[..m.total_dim()].iter().sum();
    assert!(along_identity.abs() < 1e-8, "{along_identity:e}");
}

#[test]
fn true_dilation_reproduces_simulator_probabilities() {
    // the exact joint propagator is a model with d_ER = bath dim, d_A = 1
    let p = SystemParams {
        n_fock: 4,
        ..SystemParams::default()
    };
    let dt = 0.2;
    let traj = generate_trajectory(&p, 200, dt, &MeasurementBasis::x(), 17).unwrap();
    let m = EmbeddingModel::new(
        2,
        p.bath_dim(),
        1,
        dt,
        build_hamiltonian(&p, 0.0),
        thermal_bath(&p),
        DensityMatrix::basis_state(1, 0),
    )
    .unwrap();
    let probs = conditional_probs(&m, &excited(), &traj).unwrap();
    for (r, q) in traj.records.iter().zip(&probs) {
        assert!((r.probability - q).abs() < 1e-10);
    }
}

#[test]
fn channel_is_trace_preserving_and_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let m = EmbeddingModel::init(2, 2, 0.2, 19).unwrap();
    for _ in 0..50 {
        let rho = DensityMatrix::new(random::density(4, &mut rng), vec![2, 2]).unwrap();
        let out = m.apply_channel(&rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!(herm_eig(out.matrix()).unwrap().values[0] > -1e-10);
        assert!(max_abs_diff(out.matrix(), &naive_channel(&m, rho.matrix())) < 1e-12);
    }
}

#[test]
fn uncoupled_ancilla_gives_unitary_conjugation() {
    let h_s = sigma_z() * c(0.4, 0.0) + sigma_x() * c(-1.1, 0.0);
    let h_er = ComplexMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64 * 0.1, 0.0));
    let h_er = (&h_er + h_er.adjoint()) * c(0.5, 0.0);
    let h = kron(&h_s, &identity(2)) + kron(&identity(2), &h_er);
    let m = EmbeddingModel::new(
        2,
        2,
        4,
        0.2,
        kron(&h, &identity(4)),
        DensityMatrix::maximally_mixed(2),
        DensityMatrix::basis_state(4, 0),
    )
    .unwrap();
    let u = expm_unitary(&h, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let rho = DensityMatrix::new(random::density(4, &mut rng), vec![2, 2]).unwrap();
    let out = m.apply_channel(&rho).unwrap();
    assert!(max_abs_diff(out.matrix(), &(&u * rho.matrix() * u.adjoint())) < 1e-12);
}

#[test]
fn init_spread_scales_with_constant() {
    let spread = |scale: f64| {
        let m = EmbeddingModel::init_scaled(2, 2, 0.2, 21, scale).unwrap();
        let v = herm_eig(m.hamiltonian()).unwrap().values;
        v[v.len() - 1] - v[0]
    };
    let (a, b) = (spread(0.1), spread(0.3));
    assert!((b / a - 3.0).abs() < 1e-10);
}

#[test]
fn zero_epochs_returns_initial_model() {
    let m = EmbeddingModel::init(2, 1, 0.2, 22).unwrap();
    let traj = random_trajectory(10, MeasurementBasis::x(), 0.2, 23);
    let opts = TrainOptions {
        max_epochs: 0,
        ..Default::default()
    };
    let (out, report) = train(&m, &traj, &excited(), &opts).unwrap();
    assert_eq!(out, m);
    assert!(report.log_geo_mean.is_empty());
    assert_eq!(report.epochs_run, 0);
}

#[test]
fn training_improves_training_likelihood() {
    let m = EmbeddingModel::init(2, 2, 0.2, 24).unwrap();
    let p = SystemParams::default();
    let traj = generate_trajectory(&p, 500, 0.2, &MeasurementBasis::x(), 25).unwrap();
    let opts = TrainOptions {
        adam: AdamConfig {
            lr: 0.01,
            ..Default::default()
        },
        max_epochs: 60,
        ..Default::default()
    };
    let (trained, report) = train(&m, &traj, &excited(), &opts).unwrap();
    assert_eq!(report.log_geo_mean.len(), report.epochs_run);
    let first = report.log_geo_mean[0];
    let last = *report.log_geo_mean.last().unwrap();
    assert!(last > first);
    let direct = log_prob(&trained, &excited(), &traj).unwrap() / traj.len() as f64;
    assert!((direct - last).abs() < 1e-12);
    assert!(qembed::linalg::hermiticity_error(trained.hamiltonian()) == 0.0);
}

#[test]
fn windowed_training_runs_one_window_per_epoch() {
    let m = EmbeddingModel::init(2, 1, 0.2, 26).unwrap();
    let traj = random_trajectory(30, MeasurementBasis::x(), 0.2, 27);
    let opts = TrainOptions {
        max_epochs: 6,
        segment_len: Some(10),
        ..Default::default()
    };
    let (_, report) = train(&m, &traj, &excited(), &opts).unwrap();
    assert_eq!(report.epochs_run, 6);
    assert_eq!(report.stop_reason, StopReason::MaxEpochs);
}

#[test]
fn self_consistent_training_recovers_generator_likelihood() {
    let truth = EmbeddingModel::init_scaled(2, 1, 0.2, 28, 0.3).unwrap();
    let basis = MeasurementBasis::x();
    let train_data = sample_trajectory(&truth, &excited(), &basis, 3000, 29).unwrap();
    let held_out = sample_trajectory(&truth, &excited(), &basis, 3000, 30).unwrap();
    let fresh = EmbeddingModel::init(2, 1, 0.2, 31).unwrap();
    let opts = TrainOptions {
        adam: AdamConfig {
            lr: 0.02,
            ..Default::default()
        },
        max_epochs: 1500,
        ..Default::default()
    };
    let (trained, _) = train(&fresh, &train_data, &excited(), &opts).unwrap();
    let n = held_out.len() as f64;
    let learned = log_prob(&trained, &excited(), &held_out).unwrap() / n;
    let reference = log_prob(&truth, &excited(), &held_out).unwrap() / n;
    assert!(
        (learned - reference).abs() < 0.01,
        "learned {learned}, generator {reference}"
    );
}
