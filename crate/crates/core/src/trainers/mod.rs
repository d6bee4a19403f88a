//! Global-error objective, backpropagation and the supervised trainers.
//!
//! Every trainer works on a [`LeastSquares`] problem: a parameter vector, a
//! residual vector `e = O - t` stacked over all patterns and outputs, and its
//! Jacobian. The reported error always follows the averaged convention
//! `E = (1/P) * sum_p 1/2 * sum_i (O_i - t_i)^2`; the Jacobian machinery of
//! Levenberg-Marquardt works with the un-averaged `1/2 * sum e^2`, so
//! `grad E = J^T e / P`.

mod cg;
mod config;
mod lm;
mod report;
mod rprop;

use std::time::Instant;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::network::{Network, NetworkError};

pub use cg::{fletcher_reeves_beta, train_cg, ConjugateGradient, LineSearchOutcome};
pub use config::{Algorithm, BrParams, LmParams, RpropParams, TrainerConfig, UnknownAlgorithm};
pub use lm::{damped_step, train_lm, train_lm_br, BrState, LevenbergMarquardt, LmOutcome, LM_PARAMETER_LIMIT};
pub use report::{BrSummary, IterationRecord, StopReason, TrainingReport, TrainingSummary};
pub use rprop::{train_rprop, RpropState};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("training set is empty")]
    EmptySet,
    #[error("pattern {index}: expected {expected_inputs} inputs and {expected_targets} targets")]
    RaggedSet { index: usize, expected_inputs: usize, expected_targets: usize },
    #[error("pattern {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("pattern {index}: target {value} lies outside the activation range [{lo}, {hi}]")]
    TargetOutOfRange { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("network expects {net_inputs} inputs / {net_outputs} outputs, data has {data_inputs} / {data_outputs}")]
    DimensionMismatch { net_inputs: usize, net_outputs: usize, data_inputs: usize, data_outputs: usize },
    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(String),
    #[error("{params} parameters exceed the Levenberg-Marquardt limit of {limit}")]
    TooManyParameters { params: usize, limit: usize },
    #[error(transparent)]
    UnknownAlgorithm(#[from] UnknownAlgorithm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Pattern {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        Pattern { input, target }
    }
}

/// Non-empty list of patterns with uniform dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    patterns: Vec<Pattern>,
}

impl TrainingSet {
    pub fn new(patterns: Vec<Pattern>) -> Result<Self, TrainError> {
        let first = patterns.first().ok_or(TrainError::EmptySet)?;
        let (ni, nt) = (first.input.len(), first.target.len());
        for (index, p) in patterns.iter().enumerate() {
            if p.input.len() != ni || p.target.len() != nt {
                return Err(TrainError::RaggedSet { index, expected_inputs: ni, expected_targets: nt });
            }
            if p.input.iter().chain(&p.target).any(|v| !v.is_finite()) {
                return Err(TrainError::NonFinite(index));
            }
        }
        Ok(TrainingSet { patterns })
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn input_size(&self) -> usize {
        self.patterns[0].input.len()
    }

    pub fn target_size(&self) -> usize {
        self.patterns[0].target.len()
    }

    pub fn check_against(&self, net: &Network) -> Result<(), TrainError> {
        if net.input_size() != self.input_size() || net.output_size() != self.target_size() {
            return Err(TrainError::DimensionMismatch {
                net_inputs: net.input_size(),
                net_outputs: net.output_size(),
                data_inputs: self.input_size(),
                data_outputs: self.target_size(),
            });
        }
        let (lo, hi) = net.activation().output_range();
        for (index, p) in self.patterns.iter().enumerate() {
            if let Some(&value) = p.target.iter().find(|&&t| t < lo || t > hi) {
                return Err(TrainError::TargetOutOfRange { index, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// A sum-of-squares problem over a flat parameter vector.
pub trait LeastSquares {
    fn param_count(&self) -> usize;
    fn residual_count(&self) -> usize;
    /// The `P` that the reported error averages over.
    fn pattern_count(&self) -> usize;
    fn residuals(&self, params: &[f64]) -> Vec<f64>;
    /// Residuals and their Jacobian (`residual_count x param_count`).
    fn jacobian(&self, params: &[f64]) -> (Vec<f64>, Matrix);

    /// Reported error `E = sum e^2 / (2P)`.
    fn error(&self, params: &[f64]) -> f64 {
        error_from_residuals(&self.residuals(params), self.pattern_count())
    }

    /// `E` and `dE/dparams`. The default goes through the Jacobian.
    fn error_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (e, j) = self.jacobian(params);
        let p = self.pattern_count() as f64;
        let g = j.transpose_mul(&e).into_iter().map(|v| v / p).collect();
        (error_from_residuals(&e, self.pattern_count()), g)
    }
}

pub fn error_from_residuals(residuals: &[f64], patterns: usize) -> f64 {
    0.5 * residuals.iter().map(|e| e * e).sum::<f64>() / patterns as f64
}

/// A network bound to a training set.
#[derive(Debug, Clone, Copy)]
pub struct NetworkProblem<'a> {
    net: &'a Network,
    data: &'a TrainingSet,
}

impl<'a> NetworkProblem<'a> {
    pub fn new(net: &'a Network, data: &'a TrainingSet) -> Result<Self, TrainError> {
        data.check_against(net)?;
        Ok(NetworkProblem { net, data })
    }

    /// Accumulates `sum_k seed_k * dO_k/dparams` for one pattern into `out`,
    /// where `seed` weights the output neurons.
    fn backprop_into(&self, params: &[f64], trace: &crate::network::ForwardTrace, seed: &[f64], out: &mut [f64]) {
        let net = self.net;
        let act = net.activation();
        let depth = net.layer_sizes().len();
        let mut delta: Vec<f64> =
            seed.iter().zip(&trace.activations[depth - 1]).map(|(s, &y)| s * act.derivative_from_output(y)).collect();
        for l in (1..depth).rev() {
            let layer = net.layer_of(params, l);
            let offset = net.layer_offset(l);
            let prev = &trace.activations[l - 1];
            let (gw, gb) = out[offset..offset + layer.fan_in * layer.fan_out + layer.fan_out]
                .split_at_mut(layer.fan_in * layer.fan_out);
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[j] += d;
                for (g, &a) in gw[j * layer.fan_in..(j + 1) * layer.fan_in].iter_mut().zip(prev) {
                    *g += d * a;
                }
            }
            if l > 1 {
                delta = (0..layer.fan_in)
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(j, d)| d * layer.weight(j, i)).sum();
                        back * act.derivative_from_output(prev[i])
                    })
                    .collect();
            }
        }
    }
}

impl LeastSquares for NetworkProblem<'_> {
    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn residual_count(&self) -> usize {
        self.data.len() * self.data.target_size()
    }

    fn pattern_count(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.residual_count());
        for p in self.data.patterns() {
            let trace = self.net.forward_with(params, &p.input).expect("dimensions validated");
            out.extend(trace.output().iter().zip(&p.target).map(|(o, t)| o - t));
        }
        out
    }

    fn jacobian(&self, params: &[f64]) -> (Vec<f64>, Matrix) {
        let n_out = self.data.target_size();
        let mut jac = Matrix::zeros(self.residual_count(), self.param_count());
        let mut e = Vec::with_capacity(self.residual_count());
        let mut seed = vec![0.0; n_out];
        for (pi, p) in self.data.patterns().iter().enumerate() {
            let trace = self.net.forward_with(params, &p.input).expect("dimensions validated");
            e.extend(trace.output().iter().zip(&p.target).map(|(o, t)| o - t));
            for k in 0..n_out {
                seed[k] = 1.0;
                self.backprop_into(params, &trace, &seed, jac.row_mut(pi * n_out + k));
                seed[k] = 0.0;
            }
        }
        (e, jac)
    }

    fn error_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.param_count()];
        let mut sse = 0.0;
        for p in self.data.patterns() {
            let trace = self.net.forward_with(params, &p.input).expect("dimensions validated");
            let e: Vec<f64> = trace.output().iter().zip(&p.target).map(|(o, t)| o - t).collect();
            sse += e.iter().map(|v| v * v).sum::<f64>();
            self.backprop_into(params, &trace, &e, &mut grad);
        }
        let pc = self.data.len() as f64;
        grad.iter_mut().for_each(|g| *g /= pc);
        (0.5 * sse / pc, grad)
    }
}

/// Global error `E = (1/P) sum_p E_p`, `E_p = 1/2 sum_i (O_i - t_i)^2`.
pub fn global_error(net: &Network, data: &TrainingSet) -> Result<f64, TrainError> {
    Ok(NetworkProblem::new(net, data)?.error(net.params()))
}

/// Full-batch `dE/dw` for every weight and bias, in the network's flat order.
pub fn backprop_gradient(net: &Network, data: &TrainingSet) -> Result<Vec<f64>, TrainError> {
    Ok(NetworkProblem::new(net, data)?.error_and_gradient(net.params()).1)
}

/// Runs the algorithm named in `config`.
pub fn train(net: &mut Network, data: &TrainingSet, config: &TrainerConfig) -> Result<TrainingReport, TrainError> {
    match config.algorithm {
        Algorithm::Cg => train_cg(net, data, config),
        Algorithm::Rprop => train_rprop(net, data, config),
        Algorithm::Lm => train_lm(net, data, config),
        Algorithm::LmBr => train_lm_br(net, data, config),
    }
}

/// Shared driver bookkeeping: target check and timing.
pub(crate) struct RunClock {
    start: Instant,
}

impl RunClock {
    pub(crate) fn start() -> Self {
        RunClock { start: Instant::now() }
    }

    pub(crate) fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub(crate) fn elapsed(&self) -> std::time::Duration {
        self.start.elapsed()
    }
}

pub(crate) fn target_reached(error: f64, config: &TrainerConfig) -> bool {
    config.target_error.is_some_and(|t| error <= t)
}
