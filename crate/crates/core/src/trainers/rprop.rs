//! Resilient backpropagation, iRPROP- variant: per-parameter step sizes
//! adapted from gradient signs only, no weight backtracking.

use crate::network::Network;

use super::{
    target_reached, Algorithm, LeastSquares, NetworkProblem, RpropParams, RunClock, StopReason, TrainError,
    TrainerConfig, TrainingReport, TrainingSet,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RpropState {
    params: RpropParams,
    steps: Vec<f64>,
    /// Sign of the gradient remembered from the previous update; zeroed after
    /// a sign change.
    previous_sign: Vec<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl RpropState {
    pub fn new(n: usize, params: RpropParams) -> Self {
        RpropState { params, steps: vec![params.delta0; n], previous_sign: vec![0.0; n] }
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn mean_step(&self) -> f64 {
        self.steps.iter().sum::<f64>() / self.steps.len().max(1) as f64
    }

    /// Consumes one full-batch gradient and returns the parameter changes.
    /// Only the signs of `gradient` are read.
    pub fn update(&mut self, gradient: &[f64]) -> Vec<f64> {
        assert_eq!(gradient.len(), self.steps.len());
        let p = self.params;
        gradient
            .iter()
            .zip(self.steps.iter_mut().zip(self.previous_sign.iter_mut()))
            .map(|(&g, (step, prev))| {
                let s = sign(g);
                let agreement = s * *prev;
                if agreement > 0.0 {
                    *step = (*step * p.eta_plus).min(p.delta_max);
                } else if agreement < 0.0 {
                    *step = (*step * p.eta_minus).max(p.delta_min);
                    *prev = 0.0;
                    return 0.0;
                }
                *prev = s;
                -s * *step
            })
            .collect()
    }
}

pub(crate) fn run_rprop<P: LeastSquares>(
    problem: &P,
    mut params: Vec<f64>,
    config: &TrainerConfig,
) -> (Vec<f64>, TrainingReport) {
    let clock = RunClock::start();
    let mut state = RpropState::new(params.len(), config.rprop);
    let (mut error, mut gradient) = problem.error_and_gradient(&params);
    let mut report = TrainingReport::new(Algorithm::Rprop, error);
    for _ in 0..config.max_iterations {
        if target_reached(error, config) {
            report.stop_reason = StopReason::TargetReached;
            break;
        }
        if !error.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            report.stop_reason = StopReason::NumericalFailure;
            break;
        }
        for (x, d) in params.iter_mut().zip(state.update(&gradient)) {
            *x += d;
        }
        (error, gradient) = problem.error_and_gradient(&params);
        report.push(error, state.mean_step(), clock.seconds());
    }
    if report.stop_reason == StopReason::IterationsExhausted && target_reached(error, config) {
        report.stop_reason = StopReason::TargetReached;
    }
    if !error.is_finite() {
        report.stop_reason = StopReason::NumericalFailure;
    }
    report.elapsed = clock.elapsed();
    (params, report)
}

pub fn train_rprop(
    net: &mut Network,
    data: &TrainingSet,
    config: &TrainerConfig,
) -> Result<TrainingReport, TrainError> {
    config.validate()?;
    let problem = NetworkProblem::new(net, data)?;
    let (params, report) = run_rprop(&problem, net.params().to_vec(), config);
    if report.stop_reason != StopReason::NumericalFailure {
        net.set_params(&params)?;
    }
    Ok(report)
}
