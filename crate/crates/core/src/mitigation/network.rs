//! Small fully connected network trained with Adam on mean absolute error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MitigationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            // NaN propagates so that bad inputs surface as a NaN loss.
            Activation::Relu => {
                if x < 0.0 {
                    0.0
                } else {
                    x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out.push(self.activation.apply(z));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Uniform weights in `±√(6 / fan_in)`, zero biases. Hidden layers use `hidden`,
    /// the output layer is linear.
    pub fn new(sizes: &[usize], hidden: Activation, rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / inputs.max(1) as f64).sqrt();
                Layer {
                    inputs,
                    outputs,
                    activation: if i + 2 == sizes.len() { Activation::Identity } else { hidden },
                    weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect(),
                    biases: vec![0.0; outputs],
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        s.extend(self.layers.last().map(|l| l.outputs));
        s
    }

    /// Layer chaining, buffer lengths, finite parameters.
    pub fn check(&self) -> Result<(), String> {
        if self.layers.is_empty() {
            return Err("network has no layers".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(format!("layers[{i}]: parameter buffers do not match {}×{}", l.outputs, l.inputs));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(format!(
                    "layers[{i}]: expects {} inputs, previous layer gives {}",
                    l.inputs,
                    self.layers[i - 1].outputs
                ));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(format!("layers[{i}]: non-finite parameter"));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            l.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Activations of every layer, input first.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in &self.layers {
            let mut out = Vec::with_capacity(l.outputs);
            l.forward(acts.last().expect("input"), &mut out);
            acts.push(out);
        }
        acts
    }

    fn zero_like(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()])).collect()
    }

    /// Adds `∂loss/∂θ` for one sample to `grads`, given `∂loss/∂output`.
    fn backward(&self, acts: &[Vec<f64>], output_grad: Vec<f64>, grads: &mut [(Vec<f64>, Vec<f64>)]) {
        let mut delta = output_grad;
        for (li, l) in self.layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            let input = &acts[li];
            for (d, &y) in delta.iter_mut().zip(out) {
                *d *= l.activation.derivative(y);
            }
            let (gw, gb) = &mut grads[li];
            for o in 0..l.outputs {
                gb[o] += delta[o];
                let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                for (g, &v) in row.iter_mut().zip(input) {
                    *g += delta[o] * v;
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; l.inputs];
                for (row, &d) in l.weights.chunks(l.inputs).zip(&delta) {
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparameters {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Fraction held out for testing before the train/validation split.
    pub test_fraction: f64,
    /// Fraction of the remainder used for validation.
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            hidden_layers: vec![32, 32, 32],
            activation: Activation::Relu,
            batch_size: 32,
            epochs: 200,
            learning_rate: 1e-4,
            test_fraction: 0.1,
            validation_fraction: 0.2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean absolute error per epoch.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

/// Mini-batch Adam on mean absolute error. `seed` fixes the per-epoch shuffles.
pub fn fit(
    net: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    validation: (&[Vec<f64>], &[Vec<f64>]),
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainingReport, MitigationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = net.zero_like();
    let mut v = net.zero_like();
    // β^t as running products; `powi` rounding differs between builds.
    let (mut beta1_t, mut beta2_t) = (1.0, 1.0);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut report = TrainingReport { train_loss: Vec::new(), validation_loss: Vec::new() };
    let batch = hyper.batch_size.max(1);
    let n_out = net.output_dim() as f64;

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads = net.zero_like();
            let scale = 1.0 / (chunk.len() as f64 * n_out);
            for &i in chunk {
                let acts = net.forward_all(&inputs[i]);
                let out = acts.last().expect("output");
                let mut g = Vec::with_capacity(out.len());
                for (y, t) in out.iter().zip(&targets[i]) {
                    epoch_loss += (y - t).abs();
                    g.push(scale * sign(y - t));
                }
                net.backward(&acts, g, &mut grads);
            }
            beta1_t *= hyper.beta1;
            beta2_t *= hyper.beta2;
            let (bc1, bc2) = (1.0 - beta1_t, 1.0 - beta2_t);
            for (li, layer) in net.layers.iter_mut().enumerate() {
                let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                let g = grads[li].0.iter().chain(&grads[li].1);
                let (mw, mb) = &mut m[li];
                let mm = mw.iter_mut().chain(mb.iter_mut());
                let (vw, vb) = &mut v[li];
                let vv = vw.iter_mut().chain(vb.iter_mut());
                for (((p, &g), mi), vi) in params.zip(g).zip(mm).zip(vv) {
                    *mi = hyper.beta1 * *mi + (1.0 - hyper.beta1) * g;
                    *vi = hyper.beta2 * *vi + (1.0 - hyper.beta2) * g * g;
                    *p -= hyper.learning_rate * (*mi / bc1) / ((*vi / bc2).sqrt() + hyper.epsilon);
                }
            }
        }
        let train = epoch_loss / (inputs.len().max(1) as f64 * n_out);
        let val = mean_absolute_error(net, validation.0, validation.1);
        if !train.is_finite() || !val.is_finite() {
            return Err(MitigationError::NanLoss { epoch });
        }
        report.train_loss.push(train);
        report.validation_loss.push(val);
    }
    Ok(report)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute error over all outputs; 0 for an empty set.
pub fn mean_absolute_error(net: &Mlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let total: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(x, t)| net.forward(x).iter().zip(t).map(|(y, t)| (y - t).abs()).sum::<f64>())
        .sum();
    total / (inputs.len() * net.output_dim()) as f64
}
