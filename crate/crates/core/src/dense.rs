//! Small fully-connected network: rectifier hidden layers, linear output,
//! trained by plain per-sample gradient steps on one selected output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights are stored per layer as a flat row-major `out × in` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Partial derivatives with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Shape(format!("zero-width layer in {layer_sizes:?}")));
    }
    Ok(())
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// All parameters zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_parts(layer_sizes: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let net = Self { layer_sizes, weights, biases };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Shape("parameter count does not match layer_sizes".into()));
        }
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[l].len() != pair[0] * pair[1] || self.biases[l].len() != pair[1] {
                return Err(Error::Shape(format!("layer {l} has inconsistent parameter shapes")));
            }
        }
        let finite = self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: DenseNet =
            serde_json::from_str(text).map_err(|e| Error::Shape(format!("bad network record: {e}")))?;
        net.validate()?;
        Ok(net)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "input width {} does not match network input {}",
                input.len(),
                self.input_width()
            )));
        }
        Ok(self.activations(input).pop().expect("at least one layer"))
    }

    /// Layer outputs after activation, input excluded.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let last = self.weights.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.weights.len());
        for l in 0..self.weights.len() {
            let x = if l == 0 { input } else { &acts[l - 1] };
            let n_in = self.layer_sizes[l];
            let mut out = self.biases[l].clone();
            for (o, z) in out.iter_mut().enumerate() {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                *z += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                if l != last {
                    *z = z.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Loss `(target − Q_action)²` and its gradient with respect to every parameter.
    pub fn gradient(&self, input: &[f64], action: usize, target: f64) -> Result<(f64, GradientBundle)> {
        if input.len() != self.input_width() {
            return Err(Error::Shape("input width mismatch".into()));
        }
        if action >= self.output_width() {
            return Err(Error::Shape(format!("action {action} out of range")));
        }
        let acts = self.activations(input);
        let layers = self.weights.len();
        let q = acts[layers - 1][action];
        let loss = (target - q) * (target - q);

        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        // dL/dz for the current layer's pre-activations
        let mut delta = vec![0.0; self.output_width()];
        delta[action] = 2.0 * (q - target);
        for l in (0..layers).rev() {
            let x = if l == 0 { input } else { &acts[l - 1] };
            let n_in = self.layer_sizes[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[l][o] = d;
                for (g, v) in gw[l][o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                    *g = d * v;
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, w) in prev.iter_mut().zip(&self.weights[l][o * n_in..(o + 1) * n_in]) {
                    *p += d * w;
                }
            }
            // rectifier derivative: pass only where the unit was active
            for (p, a) in prev.iter_mut().zip(&acts[l - 1]) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        Ok((loss, GradientBundle { weights: gw, biases: gb }))
    }

    pub fn apply_gradient(&mut self, grad: &GradientBundle, learn_rate: f64) {
        for (w, g) in self.weights.iter_mut().flatten().zip(grad.weights.iter().flatten()) {
            *w -= learn_rate * g;
        }
        for (b, g) in self.biases.iter_mut().flatten().zip(grad.biases.iter().flatten()) {
            *b -= learn_rate * g;
        }
    }

    /// One gradient step on `(target − Q_action)²`; returns the loss before the step.
    pub fn train_step(&mut self, input: &[f64], action: usize, target: f64, learn_rate: f64) -> Result<f64> {
        let (loss, grad) = self.gradient(input, action, target)?;
        if learn_rate != 0.0 {
            self.apply_gradient(&grad, learn_rate);
        }
        Ok(loss)
    }
}
