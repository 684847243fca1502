//! Finite-difference check of the analytic MLP gradients.
#![allow(dead_code)]

use fallstream::model::{backward, batch_loss, init_model, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-5;

fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
}

fn param(model: &mut MlpModel, layer: usize, idx: usize) -> &mut f64 {
    let l = &mut model.layers[layer];
    let nw = l.weights.len();
    if idx < nw {
        &mut l.weights[idx]
    } else {
        &mut l.biases[idx - nw]
    }
}

/// Smallest |pre-activation| over the hidden units for one input.
fn min_hidden_margin(model: &MlpModel, x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut margin = f64::INFINITY;
    for layer in &model.layers[..model.layers.len() - 1] {
        let z: Vec<f64> = (0..layer.outputs)
            .map(|j| {
                layer.biases[j]
                    + (0..layer.inputs)
                        .map(|i| a[i] * layer.weights[i * layer.outputs + j])
                        .sum::<f64>()
            })
            .collect();
        margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
        a = z.into_iter().map(|v| v.max(0.0)).collect();
    }
    margin
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter of a random network.
pub fn worst_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = [
        rng.random_range(3..7),
        rng.random_range(3..6),
        rng.random_range(2..5),
        1,
    ];
    let mut model = init_model(&dims, seed).unwrap();
    for layer in &mut model.layers {
        for b in &mut layer.biases {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    // keep every hidden unit clear of the ReLU kink, where the loss has
    // no derivative and a central difference straddles two slopes
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    while inputs.len() < 4 {
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
        if min_hidden_margin(&model, &x) > 1e-2 {
            inputs.push(x);
        }
    }
    let targets: Vec<f64> = (0..4).map(|i| (i % 2) as f64).collect();
    let batch: Vec<(&[f64], f64)> = inputs.iter().map(|v| v.as_slice()).zip(targets).collect();

    let grads = backward(&model, &batch).unwrap();
    let mut worst = 0.0f64;
    for (k, g) in grads.layers.iter().enumerate() {
        let analytic: Vec<f64> = g.weights.iter().chain(&g.biases).copied().collect();
        for (idx, a) in analytic.into_iter().enumerate() {
            let orig = *param(&mut model, k, idx);
            *param(&mut model, k, idx) = orig + STEP;
            let up = batch_loss(&model, &batch).unwrap();
            *param(&mut model, k, idx) = orig - STEP;
            let down = batch_loss(&model, &batch).unwrap();
            *param(&mut model, k, idx) = orig;
            worst = worst.max(rel(a, (up - down) / (2.0 * STEP)));
        }
    }
    worst
}
