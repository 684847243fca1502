use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{backward, batch_loss, forward, Dense, MlpModel};
use crate::error::{Error, Result};
use crate::ingest::BinaryClass;

/// A normalized feature vector with its true class.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub features: Vec<f64>,
    pub class: BinaryClass,
}

impl Labeled {
    pub fn new(features: Vec<f64>, class: BinaryClass) -> Self {
        Self { features, class }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    /// Fraction of each class assigned to the training split.
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            learning_rate: 1e-3,
            batch_size: 32,
            init_seed: 1,
            shuffle_seed: 2,
            train_fraction: 0.8,
            split_seed: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(
                "train fraction must lie strictly in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Full-data loss before training and after every epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |e| e.loss)
    }
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    step: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    fn new(model: &MlpModel, lr: f64) -> Self {
        let zeros: Vec<Dense> = model
            .layers
            .iter()
            .map(|l| Dense {
                weights: vec![0.0; l.weights.len()],
                biases: vec![0.0; l.biases.len()],
                ..l.clone()
            })
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &[Dense]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let apply = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        for (k, layer) in model.layers.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            apply(
                &mut layer.weights,
                &grads[k].weights,
                &mut m.weights,
                &mut v.weights,
            );
            apply(
                &mut layer.biases,
                &grads[k].biases,
                &mut m.biases,
                &mut v.biases,
            );
        }
    }
}

/// Mini-batch Adam training for exactly `config.epochs` epochs.
pub fn train(
    model: &MlpModel,
    data: &[Labeled],
    config: &TrainConfig,
) -> Result<(MlpModel, History)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("no training data".into()));
    }
    let mut model = model.clone();
    model.validate()?;
    let pairs: Vec<(&[f64], f64)> = data
        .iter()
        .map(|d| (d.features.as_slice(), d.class.target()))
        .collect();
    let mut history = History {
        initial_loss: batch_loss(&model, &pairs)?,
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut adam = Adam::new(&model, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| pairs[i]));
            let grads = backward(&model, &batch)?;
            adam.update(&mut model, &grads.layers);
        }
        history.epochs.push(EpochRecord {
            epoch,
            loss: batch_loss(&model, &pairs)?,
            accuracy: accuracy(&model, data)?,
        });
    }
    Ok((model, history))
}

fn accuracy(model: &MlpModel, data: &[Labeled]) -> Result<f64> {
    let mut correct = 0usize;
    for d in data {
        if predict_class(forward(model, &d.features)?) == d.class {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Decision rule: FALL iff `p ≥ 0.5`.
pub fn predict_class(p_fall: f64) -> BinaryClass {
    if p_fall >= 0.5 {
        BinaryClass::Fall
    } else {
        BinaryClass::Adl
    }
}

/// Seeded stratified split. Returns (train, test) indices, each ascending.
/// Every class contributes `round(fraction × count)` items to the training
/// split, keeping at least one item on each side when the class has two
/// or more members.
pub fn stratified_split(
    classes: &[BinaryClass],
    train_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [BinaryClass::Fall, BinaryClass::Adl] {
        let mut idx: Vec<usize> = (0..classes.len())
            .filter(|&i| classes[i] == class)
            .collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut k = (train_fraction * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        train.extend_from_slice(&idx[..k.min(n)]);
        test.extend_from_slice(&idx[k.min(n)..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
