use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense layer `y = W x + b`, with `W` stored row-major as `out x inp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub inp: usize,
    pub out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inp: usize, out: usize) -> Self {
        Self {
            inp,
            out,
            weights: vec![0.0; inp * out],
            bias: vec![0.0; out],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out)
            .map(|o| {
                let row = &self.weights[o * self.inp..(o + 1) * self.inp];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// Multilayer perceptron with tanh hidden layers and a linear output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// Input to each layer; the last entry is the network output.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape has at least the input")
    }
}

impl Mlp {
    /// All-zero network with the given layer widths, input first.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inp + layer.out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inp];
        s.extend(self.layers.iter().map(|l| l.out));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inp
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out).unwrap_or(0)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks that stored shapes agree with the weight arrays and chain up.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParams("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inp * l.out || l.bias.len() != l.out {
                return Err(Error::InvalidParams(format!(
                    "layer {i}: {}x{} shape with {} weights and {} biases",
                    l.out,
                    l.inp,
                    l.weights.len(),
                    l.bias.len()
                )));
            }
            if i > 0 && self.layers[i - 1].out != l.inp {
                return Err(Error::InvalidParams(format!(
                    "layer {i} expects {} inputs, previous layer gives {}",
                    l.inp,
                    self.layers[i - 1].out
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!("layer {i} has non-finite weights")));
            }
        }
        Ok(())
    }

    pub fn forward_tape(&self, x: &[f64]) -> Result<Tape> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "network input {} vs feature length {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.apply(acts.last().unwrap());
            if i < last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
        }
        Ok(Tape { acts })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_tape(x)?.acts.pop().unwrap())
    }

    /// Gradient of `upstream · output` with respect to every weight, returned
    /// as a network of the same shape.
    pub fn backward(&self, tape: &Tape, upstream: &[f64]) -> Result<Mlp> {
        if upstream.len() != self.output_dim() || tape.acts.len() != self.layers.len() + 1 {
            return Err(Error::DimensionMismatch(
                "backward pass does not match the network shape".into(),
            ));
        }
        let mut grad = Mlp::zeros(&self.sizes());
        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &tape.acts[i];
            let g = &mut grad.layers[i];
            g.bias.copy_from_slice(&delta);
            for (row, d) in g.weights.chunks_mut(layer.inp).zip(&delta) {
                for (w, v) in row.iter_mut().zip(input) {
                    *w = d * v;
                }
            }
            if i > 0 {
                // input[i] = tanh(pre); d tanh = 1 - tanh^2
                delta = (0..layer.inp)
                    .map(|k| {
                        let back: f64 = (0..layer.out)
                            .map(|o| layer.weights[o * layer.inp + k] * delta[o])
                            .sum();
                        back * (1.0 - input[k] * input[k])
                    })
                    .collect();
            }
        }
        Ok(grad)
    }

    /// self += alpha * other.
    pub fn add_scaled(&mut self, other: &Mlp, alpha: f64) {
        for (l, g) in self.layers.iter_mut().zip(&other.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w += alpha * d);
            l.bias.iter_mut().zip(&g.bias).for_each(|(b, d)| *b += alpha * d);
        }
    }

    /// All weights and biases, layer by layer.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.n_params());
        let mut it = theta.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|w| *w = it.next().unwrap());
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// d log softmax(z)_a / dz = onehot(a) - softmax(z).
pub fn log_softmax_grad(probs: &[f64], action: usize) -> Vec<f64> {
    probs
        .iter()
        .enumerate()
        .map(|(k, p)| if k == action { 1.0 - p } else { -p })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_is_uniform_and_zero() {
        let net = Mlp::zeros(&[4, 8, 8, 5]);
        let p = softmax(&net.forward(&[0.3, -1.0, 2.0, 0.5]).unwrap());
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
        let v = Mlp::zeros(&[4, 8, 1]);
        assert_eq!(v.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn softmax_sums_to_one_and_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::init(&[6, 16, 16, 9], &mut rng);
        for k in 0..20 {
            let x: Vec<f64> = (0..6).map(|i| ((i * k) as f64 * 0.37).sin() * 3.0).collect();
            let p = softmax(&net.forward(&x).unwrap());
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0));
        }
        let p = softmax(&[1000.0, -1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::init(&[3, 4, 2], &mut rng);
        let mut other = Mlp::zeros(&[3, 4, 2]);
        other.set_flat(&net.flat());
        assert_eq!(net, other);
        assert_eq!(net.n_params(), 3 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn rejects_wrong_input_length() {
        let net = Mlp::zeros(&[3, 2]);
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }
}
