//! Finite-difference verification of the analytic gradients, including the
//! awkward regimes: saturated logits, single-class batches, zero inputs, and
//! single-record batches.

mod common;

use common::{fd_gradient, random_batch, random_params, within_mixed_tol};
use fedchain_core::model::{ModelKind, ModelParams, Record, FEATURE_COUNT, LR_PARAM_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn check_all_lr_components(params: &ModelParams, batch: &[Record], label: &str) {
    let (_, grad) = params.loss_and_gradient(batch).unwrap();
    for idx in 0..LR_PARAM_COUNT {
        let fd = fd_gradient(params, batch, idx, EPS);
        assert!(
            within_mixed_tol(grad[idx], fd, TOL),
            "{label}: component {idx}: analytic {} vs finite difference {fd}",
            grad[idx],
        );
    }
}

#[test]
fn linear_model_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for trial in 0..40 {
        let params = random_params(ModelKind::Lr, &mut rng);
        let len = rng.random_range(1..9);
        let batch = random_batch(&mut rng, len);
        check_all_lr_components(&params, &batch, &format!("trial {trial}"));
    }
}

#[test]
fn linear_model_gradient_survives_saturation_and_degenerate_batches() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);

    // Saturated logits: weights large enough that |z| is far into the tails.
    let big = ModelParams::from_values(
        ModelKind::Lr,
        (0..LR_PARAM_COUNT).map(|i| if i % 2 == 0 { 8.0 } else { -8.0 }).collect(),
    )
    .unwrap();
    let batch = random_batch(&mut rng, 6);
    check_all_lr_components(&big, &batch, "saturated");

    // Single-class batches in both directions.
    for label in [0u8, 1u8] {
        let batch: Vec<Record> = random_batch(&mut rng, 5)
            .into_iter()
            .map(|r| Record::new(*r.features(), label).unwrap())
            .collect();
        let params = random_params(ModelKind::Lr, &mut rng);
        check_all_lr_components(&params, &batch, &format!("all-label-{label}"));
    }

    // All-zero features: the logit is exactly zero for a bias-free model.
    let zeros = vec![Record::new([0.0; FEATURE_COUNT], 1).unwrap(); 3];
    let params = random_params(ModelKind::Lr, &mut rng);
    check_all_lr_components(&params, &zeros, "zero-features");

    // A single record is the smallest legal batch.
    let one = random_batch(&mut rng, 1);
    let params = random_params(ModelKind::Lr, &mut rng);
    check_all_lr_components(&params, &one, "single-record");
}

#[test]
fn network_gradient_matches_finite_differences_on_sampled_components() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let param_count = ModelKind::Nn.param_count();
    for trial in 0..10 {
        let params = random_params(ModelKind::Nn, &mut rng);
        let len = rng.random_range(1..6);
        let batch = random_batch(&mut rng, len);
        let (_, grad) = params.loss_and_gradient(&batch).unwrap();
        // The full parameter vector is too wide for exhaustive differencing;
        // a random sample plus the extremes covers every layer.
        let mut indices: Vec<usize> =
            (0..60).map(|_| rng.random_range(0..param_count)).collect();
        indices.push(0);
        indices.push(param_count - 1);
        for idx in indices {
            let fd = fd_gradient(&params, &batch, idx, EPS);
            assert!(
                within_mixed_tol(grad[idx], fd, TOL),
                "trial {trial}, component {idx}: analytic {} vs finite difference {fd}",
                grad[idx],
            );
        }
    }
}
