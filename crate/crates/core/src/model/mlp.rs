use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SCHEMA_V1;

/// Default layer widths: 58 features, two hidden layers, one output.
pub const DEFAULT_DIMS: [usize; 4] = [58, 64, 32, 1];

/// Clipping bound for probabilities inside the loss.
pub const LOSS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One dense layer; `weights` is row-major `inputs × outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.outputs + j]
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
    }
}

/// A four-layer perceptron (input, two hidden, output) with a sigmoid
/// output unit giving the fall probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Dense>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub schema_version: String,
}

/// Parameter gradients, shaped like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }
}

pub fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() != 4 {
        return Err(Error::Config(format!(
            "model needs exactly 4 layers (input, 2 hidden, output), got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer widths must be positive: {dims:?}"
        )));
    }
    if dims[3] != 1 {
        return Err(Error::Config(format!(
            "output layer must have one unit, got {}",
            dims[3]
        )));
    }
    Ok(())
}

/// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero biases.
pub fn init_model(dims: &[usize], seed: u64) -> Result<MlpModel> {
    validate_dims(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Dense::zeros(fan_in, fan_out);
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        layer_dims: dims.to_vec(),
        layers,
        hidden_activation: Activation::Relu,
        output_activation: Activation::Sigmoid,
        schema_version: SCHEMA_V1.into(),
    })
}

/// Per-layer pre-activations and activations of one forward pass.
struct Trace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn validate(&self) -> Result<()> {
        validate_dims(&self.layer_dims)?;
        if self.output_activation != Activation::Sigmoid {
            return Err(Error::Config("output activation must be sigmoid".into()));
        }
        if self.layers.len() != self.layer_dims.len() - 1 {
            return Err(Error::Config("layer count does not match dims".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let (i, o) = (self.layer_dims[k], self.layer_dims[k + 1]);
            if layer.inputs != i
                || layer.outputs != o
                || layer.weights.len() != i * o
                || layer.biases.len() != o
            {
                return Err(Error::Config(format!(
                    "layer {k} shape does not chain {i}x{o}"
                )));
            }
            if !layer
                .weights
                .iter()
                .chain(&layer.biases)
                .all(|v| v.is_finite())
            {
                return Err(Error::Config(format!(
                    "layer {k} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} inputs", self.input_dim()),
                found: format!("{} inputs", input.len()),
            });
        }
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Raw output logit.
    pub fn logit(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if k < last {
                let act = self.hidden_activation;
                next.iter_mut().for_each(|z| *z = act.apply(*z));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur[0])
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(input.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.affine(&post[k], &mut z);
            let act = self.activation(k);
            let a = z.iter().map(|&v| act.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }
}

/// Fall probability of a normalized feature vector, strictly inside (0, 1).
pub fn forward(model: &MlpModel, input: &[f64]) -> Result<f64> {
    let p = sigmoid(model.logit(input)?);
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Binary cross-entropy with `p` clipped to `[ε, 1−ε]`.
pub fn loss_bce(p: f64, target: f64) -> f64 {
    let p = p.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Mean loss of the model over a batch.
pub fn batch_loss(model: &MlpModel, batch: &[(&[f64], f64)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, t) in batch {
        total += loss_bce(sigmoid(model.logit(x)?), *t);
    }
    Ok(total / batch.len() as f64)
}

/// Exact gradients of the mean batch loss with respect to every parameter.
pub fn backward(model: &MlpModel, batch: &[(&[f64], f64)]) -> Result<Gradients> {
    let mut grads = Gradients {
        layers: model
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect(),
    };
    if batch.is_empty() {
        return Ok(grads);
    }
    let scale = 1.0 / batch.len() as f64;
    let last = model.layers.len() - 1;
    for (x, target) in batch {
        model.check_input(x)?;
        let trace = model.trace(x);
        // sigmoid + cross-entropy: dL/dz = p − t
        let mut delta = vec![trace.post[last + 1][0] - target];
        for k in (0..=last).rev() {
            let layer = &model.layers[k];
            let g = &mut grads.layers[k];
            let input = &trace.post[k];
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (gw, d) in row.iter_mut().zip(&delta) {
                    *gw += scale * a * d;
                }
            }
            for (gb, d) in g.biases.iter_mut().zip(&delta) {
                *gb += scale * d;
            }
            if k == 0 {
                break;
            }
            let act = model.activation(k - 1);
            let (z_prev, a_prev) = (&trace.pre[k - 1], &trace.post[k]);
            delta = (0..layer.inputs)
                .map(|i| {
                    let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                    let back: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    back * act.derivative(z_prev[i], a_prev[i])
                })
                .collect();
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn zeroed(dims: &[usize]) -> MlpModel {
        let mut m = init_model(dims, 0).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        m
    }

    #[test]
    fn init_shapes_and_determinism() {
        let a = init_model(&DEFAULT_DIMS, 7).unwrap();
        let b = init_model(&DEFAULT_DIMS, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_model(&DEFAULT_DIMS, 8).unwrap());
        let shapes: Vec<_> = a.layers.iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(58, 64), (64, 32), (32, 1)]);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let limit = (6.0f64 / 122.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        a.validate().unwrap();
    }

    #[test]
    fn invalid_dims() {
        assert!(matches!(init_model(&[58, 64, 1], 0), Err(Error::Config(_))));
        assert!(init_model(&[58, 0, 32, 1], 0).is_err());
        assert!(init_model(&[58, 64, 32, 2], 0).is_err());
    }

    #[test]
    fn forward_examples() {
        let m = zeroed(&DEFAULT_DIMS);
        assert_eq!(forward(&m, &[0.3; 58]).unwrap(), 0.5);

        let mut m = zeroed(&[1, 1, 1, 1]);
        for l in &mut m.layers {
            l.weights[0] = 1.0;
        }
        assert_eq!(forward(&m, &[0.0]).unwrap(), 0.5);
        assert_eq!(forward(&m, &[2.0]).unwrap(), sigmoid(2.0));
        assert!(matches!(
            forward(&m, &[0.0, 1.0]),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn forward_stays_inside_unit_interval() {
        let mut m = zeroed(&[1, 1, 1, 1]);
        for l in &mut m.layers {
            l.weights[0] = 100.0;
        }
        let hi = forward(&m, &[1e6]).unwrap();
        assert!(hi < 1.0 && hi > 0.5);
        m.layers[2].weights[0] = -100.0;
        let lo = forward(&m, &[1e6]).unwrap();
        assert!(lo > 0.0 && lo < 0.5);
    }

    #[test]
    fn loss_examples() {
        assert!((loss_bce(0.5, 1.0) - LN_2).abs() < 1e-15);
        assert!((loss_bce(0.5, 0.0) - LN_2).abs() < 1e-15);
        assert!(loss_bce(1.0 - 1e-15, 1.0) < 1e-12);
        assert!(loss_bce(0.0, 0.0) < 1e-11);
        assert!(loss_bce(0.0, 1.0).is_finite());
        // 1 − p is exact for these
        for p in [0.125, 0.25, 0.75, 0.0078125] {
            assert_eq!(loss_bce(p, 1.0), loss_bce(1.0 - p, 0.0));
        }
    }

    #[test]
    fn balanced_batch_at_zero_weights_has_zero_output_bias_gradient() {
        let m = zeroed(&[3, 4, 2, 1]);
        let xs = [[0.1, 0.5, 0.9], [0.7, 0.2, 0.4]];
        let batch: Vec<(&[f64], f64)> = vec![(&xs[0], 1.0), (&xs[1], 0.0)];
        let g = backward(&m, &batch).unwrap();
        assert_eq!(g.layers[2].biases[0], 0.0);
    }

    #[test]
    fn duplicated_batch_same_gradient() {
        let m = init_model(&[3, 4, 2, 1], 1).unwrap();
        let xs = [[0.1, -0.5, 0.9], [0.7, 0.2, -0.4], [0.3, 0.3, 0.3]];
        let batch: Vec<(&[f64], f64)> = xs
            .iter()
            .zip([1.0, 0.0, 1.0])
            .map(|(x, t)| (&x[..], t))
            .collect();
        let doubled: Vec<_> = batch.iter().chain(&batch).copied().collect();
        let a: Vec<f64> = backward(&m, &batch).unwrap().iter().collect();
        let b: Vec<f64> = backward(&m, &doubled).unwrap().iter().collect();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300) + 1e-18);
        }
    }
}
