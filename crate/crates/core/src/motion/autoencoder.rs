//! Fully-connected autoencoder trained by full-batch gradient descent on MSE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};

/// Nonlinearity applied after every hidden layer. The output layer is linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Identity => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl AutoencoderConfig {
    /// `width -> 4 -> width` with a sigmoid bottleneck.
    pub fn default_for(width: usize) -> Self {
        AutoencoderConfig {
            layer_widths: vec![width, 4, width],
            activation: Activation::Sigmoid,
            learning_rate: 1.0,
            epochs: 3000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.layer_widths;
        if w.len() < 2 || w.contains(&0) {
            return Err(Error::Config(format!(
                "ae.layer_widths needs at least two positive widths, got {w:?}"
            )));
        }
        if w.iter().ne(w.iter().rev()) {
            return Err(Error::Config(format!(
                "ae.layer_widths must be symmetric, got {w:?}"
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "ae.learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// One dense layer, `weights` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

/// Result of [`train_autoencoder`]: the model and the loss before training and
/// after every epoch (`epochs + 1` entries).
#[derive(Debug, Clone)]
pub struct TrainedAutoencoder {
    pub model: AutoencoderModel,
    pub loss_history: Vec<f64>,
}

impl AutoencoderModel {
    /// Uniform(-0.5, 0.5) weights and biases drawn from `seed`.
    pub fn initialize(widths: &[usize], activation: Activation, seed: u64) -> Self {
        let mut rng = seeded(seed, Stream::Autoencoder);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs)
                        .map(|_| rng.random_range(-0.5..0.5))
                        .collect(),
                    biases: (0..outputs).map(|_| rng.random_range(-0.5..0.5)).collect(),
                }
            })
            .collect();
        AutoencoderModel { layers, activation }
    }

    /// Single linear layer with identity weights and zero bias.
    pub fn identity(width: usize) -> Self {
        let mut weights = vec![0.0; width * width];
        for i in 0..width {
            weights[i * width + i] = 1.0;
        }
        AutoencoderModel {
            layers: vec![Layer {
                inputs: width,
                outputs: width,
                weights,
                biases: vec![0.0; width],
            }],
            activation: Activation::Identity,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        w.extend(self.layers.last().map(|l| l.outputs));
        w
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.input_width(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input first, decoder output last.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.forward(&acts[i], &mut z);
            if i != last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        Ok(self.activations(x).pop().unwrap_or_default())
    }

    /// Output of the bottleneck layer.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        let mut acts = self.activations(x);
        let middle = self.layers.len().div_ceil(2);
        Ok(acts.swap_remove(middle))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All parameters, each layer's weights followed by its biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::WidthMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            layer.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(layer.biases.len());
            layer.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Mean squared reconstruction error over every element of `data`.
    pub fn loss(&self, data: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for x in data {
            let y = self.reconstruct(x)?;
            total += y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / (data.len() * self.input_width()) as f64)
    }

    /// Loss and its gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self, data: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let scale = 1.0 / (data.len() * self.input_width()) as f64;
        let mut grad_w: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.weights.len()])
            .collect();
        let mut grad_b: Vec<Vec<f64>> = self
            .layers
            .iter()
            .map(|l| vec![0.0; l.biases.len()])
            .collect();
        let mut total = 0.0;

        for x in data {
            self.check_width(x)?;
            let acts = self.activations(x);
            let output = &acts[self.layers.len()];
            let mut delta: Vec<f64> = output
                .iter()
                .zip(x)
                .map(|(y, t)| {
                    total += (y - t) * (y - t);
                    2.0 * (y - t) * scale
                })
                .collect();

            for (i, layer) in self.layers.iter().enumerate().rev() {
                let input = &acts[i];
                for (o, d) in delta.iter().enumerate() {
                    grad_b[i][o] += d;
                    let row = &mut grad_w[i][o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                }
                if i == 0 {
                    break;
                }
                delta = (0..layer.inputs)
                    .map(|j| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * layer.weights[o * layer.inputs + j])
                            .sum();
                        back * self.activation.derivative_from_output(input[j])
                    })
                    .collect();
            }
        }

        let grad = grad_w
            .into_iter()
            .zip(grad_b)
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        Ok((total * scale, grad))
    }
}

pub fn train_autoencoder(
    features: &[Vec<f64>],
    cfg: &AutoencoderConfig,
) -> Result<TrainedAutoencoder> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::InvalidArgument(
            "autoencoder needs at least one training feature".into(),
        ));
    }
    let mut model = AutoencoderModel::initialize(&cfg.layer_widths, cfg.activation, cfg.seed);
    let mut params = model.parameters();
    let mut history = Vec::with_capacity(cfg.epochs + 1);

    for epoch in 0..=cfg.epochs {
        if epoch == cfg.epochs {
            let loss = model.loss(features)?;
            check_loss(epoch, loss)?;
            history.push(loss);
            break;
        }
        let (loss, grad) = model.loss_and_gradient(features)?;
        check_loss(epoch, loss)?;
        history.push(loss);
        params
            .iter_mut()
            .zip(&grad)
            .for_each(|(p, g)| *p -= cfg.learning_rate * g);
        model.set_parameters(&params)?;
    }

    Ok(TrainedAutoencoder {
        model,
        loss_history: history,
    })
}

fn check_loss(epoch: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, loss })
    }
}
