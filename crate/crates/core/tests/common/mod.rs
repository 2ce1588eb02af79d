//! Shared oracles for the integration suites: random model/batch builders
//! and a central finite-difference gradient, all independent of the library's
//! own gradient code.

#![allow(dead_code)]

use fedchain_core::model::{ModelKind, ModelParams, Record, FEATURE_COUNT};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn random_record(rng: &mut ChaCha20Rng) -> Record {
    let mut features = [0.0f64; FEATURE_COUNT];
    for v in &mut features {
        *v = rng.random_range(-2.0..2.0);
    }
    Record::new(features, u8::from(rng.random_range(0..2u8) == 1)).unwrap()
}

pub fn random_batch(rng: &mut ChaCha20Rng, len: usize) -> Vec<Record> {
    (0..len).map(|_| random_record(rng)).collect()
}

/// Random parameters in a numerically comfortable range: uniform for the
/// linear model, a jittered fan-in-scaled draw for the network.
pub fn random_params(kind: ModelKind, rng: &mut ChaCha20Rng) -> ModelParams {
    match kind {
        ModelKind::Lr => {
            let values = (0..kind.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect();
            ModelParams::from_values(kind, values).unwrap()
        }
        ModelKind::Nn => {
            let base = ModelParams::init(kind, rng.random());
            let values = base
                .values()
                .iter()
                .map(|v| v + rng.random_range(-0.05..0.05))
                .collect();
            ModelParams::from_values(kind, values).unwrap()
        }
    }
}

/// Central finite difference of the mean batch loss along one component.
pub fn fd_gradient(params: &ModelParams, batch: &[Record], idx: usize, eps: f64) -> f64 {
    let mut plus = params.values().to_vec();
    plus[idx] += eps;
    let mut minus = params.values().to_vec();
    minus[idx] -= eps;
    let loss = |values: Vec<f64>| {
        ModelParams::from_values(params.kind(), values)
            .unwrap()
            .loss_and_gradient(batch)
            .unwrap()
            .0
    };
    (loss(plus) - loss(minus)) / (2.0 * eps)
}

/// Mixed relative/absolute comparison: |a-b| <= tol * (1 + max(|a|,|b|)).
pub fn within_mixed_tol(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
