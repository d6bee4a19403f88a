//! Multilayer perceptron: activations, topology, forward propagation and
//! weight initialization.
//!
//! Parameters are held in one flat vector so the trainers can treat the
//! network as a point in parameter space. For every non-input layer the
//! layout is the row-major weight matrix (`fan_out x fan_in`) followed by the
//! bias vector; layers follow each other in input-to-output order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network needs an input layer, at least one hidden layer and an output layer, got {0} layers")]
    TooFewLayers(usize),
    #[error("layer {0} has zero neurons")]
    EmptyLayer(usize),
    #[error("expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("non-finite value at parameter {0}")]
    NonFinite(usize),
    #[error("steepness must be positive and finite, got {0}")]
    BadSteepness(f64),
}

/// Activation used by every hidden and output neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `1 / (1 + e^-x)`, output in (0, 1).
    Logistic,
    /// `2 / (1 + e^(-a x)) - 1`, output in (-1, 1).
    BipolarSigmoid { steepness: f64 },
}

impl Default for Activation {
    fn default() -> Self {
        Activation::BipolarSigmoid { steepness: 2.0 }
    }
}

impl Activation {
    pub fn bipolar(steepness: f64) -> Result<Self, NetworkError> {
        if !(steepness.is_finite() && steepness > 0.0) {
            return Err(NetworkError::BadSteepness(steepness));
        }
        Ok(Activation::BipolarSigmoid { steepness })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
            // identical to 2/(1+e^-ax) - 1 without the cancellation near 0
            Activation::BipolarSigmoid { steepness } => (0.5 * steepness * x).tanh(),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.derivative_from_output(self.apply(x))
    }

    /// Derivative expressed through the activation value `y = f(x)`.
    #[inline]
    pub fn derivative_from_output(&self, y: f64) -> f64 {
        match *self {
            Activation::Logistic => y * (1.0 - y),
            Activation::BipolarSigmoid { steepness } => 0.5 * steepness * (1.0 - y * y),
        }
    }

    /// Closed interval containing every output value.
    pub fn output_range(&self) -> (f64, f64) {
        match self {
            Activation::Logistic => (0.0, 1.0),
            Activation::BipolarSigmoid { .. } => (-1.0, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Logistic => "logistic",
            Activation::BipolarSigmoid { .. } => "bipolar-sigmoid",
        }
    }
}

/// Borrowed view of one non-input layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major, `fan_out x fan_in`; row `j` holds the weights into neuron `j`.
    pub weights: &'a [f64],
    pub biases: &'a [f64],
}

impl LayerView<'_> {
    #[inline]
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.fan_in + from]
    }
}

/// Values recorded by a forward pass, needed for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l]` the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
    /// Weighted sums; `pre_activations[l - 1]` belongs to layer `l`.
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace always holds the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Number of weights and biases of a fully connected topology.
pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<(), NetworkError> {
    if layer_sizes.len() < 3 {
        return Err(NetworkError::TooFewLayers(layer_sizes.len()));
    }
    if let Some(i) = layer_sizes.iter().position(|&n| n == 0) {
        return Err(NetworkError::EmptyLayer(i));
    }
    Ok(())
}

impl Network {
    /// Builds a network from an explicit flat parameter vector.
    pub fn from_params(layer_sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self, NetworkError> {
        validate_sizes(layer_sizes)?;
        let expected = parameter_count(layer_sizes);
        if params.len() != expected {
            return Err(NetworkError::Shape { expected, actual: params.len() });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(NetworkError::NonFinite(i));
        }
        let mut offsets = Vec::with_capacity(layer_sizes.len());
        let mut acc = 0;
        offsets.push(0);
        for w in layer_sizes.windows(2) {
            acc += w[0] * w[1] + w[1];
            offsets.push(acc);
        }
        Ok(Network { layer_sizes: layer_sizes.to_vec(), activation, params, offsets })
    }

    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self, NetworkError> {
        Self::from_params(layer_sizes, activation, vec![0.0; parameter_count(layer_sizes)])
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    /// Deterministic for a given seed.
    pub fn initialize(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self, NetworkError> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 1..net.layer_sizes.len() {
            let (fan_in, fan_out) = (net.layer_sizes[l - 1], net.layer_sizes[l]);
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = net.offsets[l - 1];
            for w in &mut net.params[start..start + fan_in * fan_out] {
                *w = rng.gen_range(-r..=r);
            }
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn weight_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn bias_count(&self) -> usize {
        self.layer_sizes[1..].iter().sum()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NetworkError> {
        if params.len() != self.params.len() {
            return Err(NetworkError::Shape { expected: self.params.len(), actual: params.len() });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(NetworkError::NonFinite(i));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Offset of layer `l` (1-based, as in `layer_sizes`) inside the flat vector.
    pub fn layer_offset(&self, l: usize) -> usize {
        self.offsets[l - 1]
    }

    pub fn layer(&self, l: usize) -> LayerView<'_> {
        layer_view(&self.layer_sizes, &self.offsets, &self.params, l)
    }

    /// Layer `l` of an external parameter vector shaped like this network.
    pub fn layer_of<'a>(&self, params: &'a [f64], l: usize) -> LayerView<'a> {
        layer_view(&self.layer_sizes, &self.offsets, params, l)
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (fan_in, fan_out) = (self.layer_sizes[l - 1], self.layer_sizes[l]);
        let start = self.offsets[l - 1];
        let block = &mut self.params[start..start + fan_in * fan_out + fan_out];
        block.split_at_mut(fan_in * fan_out)
    }

    /// Output vector only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.forward_with(&self.params, input).map(|mut t| t.activations.pop().unwrap())
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace, NetworkError> {
        self.forward_with(&self.params, input)
    }

    /// Forward pass using `params` in place of the network's own parameters.
    /// `params` must have the length of [`Network::params`].
    pub fn forward_with(&self, params: &[f64], input: &[f64]) -> Result<ForwardTrace, NetworkError> {
        if input.len() != self.input_size() {
            return Err(NetworkError::Shape { expected: self.input_size(), actual: input.len() });
        }
        if params.len() != self.params.len() {
            return Err(NetworkError::Shape { expected: self.params.len(), actual: params.len() });
        }
        let depth = self.layer_sizes.len();
        let mut activations = Vec::with_capacity(depth);
        let mut pre_activations = Vec::with_capacity(depth - 1);
        activations.push(input.to_vec());
        for l in 1..depth {
            let layer = layer_view(&self.layer_sizes, &self.offsets, params, l);
            let prev = &activations[l - 1];
            let z: Vec<f64> = (0..layer.fan_out)
                .map(|j| {
                    let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                    layer.biases[j] + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>()
                })
                .collect();
            let a = z.iter().map(|&v| self.activation.apply(v)).collect();
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace { activations, pre_activations })
    }
}

fn layer_view<'a>(sizes: &[usize], offsets: &[usize], params: &'a [f64], l: usize) -> LayerView<'a> {
    let (fan_in, fan_out) = (sizes[l - 1], sizes[l]);
    let start = offsets[l - 1];
    let (weights, rest) = params[start..].split_at(fan_in * fan_out);
    LayerView { fan_in, fan_out, weights, biases: &rest[..fan_out] }
}
