//! Nonlinear conjugate gradient with Fletcher-Reeves directions and a
//! backtracking Armijo line search.

use crate::linalg::dot;
use crate::network::Network;

use super::{
    target_reached, Algorithm, LeastSquares, NetworkProblem, RunClock, StopReason, TrainError, TrainerConfig,
    TrainingReport, TrainingSet,
};

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

/// `beta_k = |g_k|^2 / |g_{k-1}|^2`.
pub fn fletcher_reeves_beta(current: &[f64], previous: &[f64]) -> f64 {
    let den = dot(previous, previous);
    if den == 0.0 {
        0.0
    } else {
        dot(current, current) / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchOutcome {
    Accepted {
        step: f64,
    },
    /// No trial step satisfied the sufficient-decrease condition.
    Failed,
    /// The gradient vanished; there is no descent direction.
    Stationary,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct ConjugateGradient {
    params: Vec<f64>,
    error: f64,
    gradient: Vec<f64>,
    direction: Vec<f64>,
    since_restart: usize,
    pub restarts: usize,
}

impl ConjugateGradient {
    /// Starts along steepest descent, `p_0 = -g_0`.
    pub fn new<P: LeastSquares>(problem: &P, params: Vec<f64>) -> Self {
        let (error, gradient) = problem.error_and_gradient(&params);
        let direction = gradient.iter().map(|g| -g).collect();
        ConjugateGradient { params, error, gradient, direction, since_restart: 0, restarts: 0 }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn error(&self) -> f64 {
        self.error
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    fn reset_direction(&mut self) {
        self.direction = self.gradient.iter().map(|g| -g).collect();
        self.since_restart = 0;
        self.restarts += 1;
    }

    fn is_steepest(&self) -> bool {
        self.since_restart == 0
    }

    /// One iteration: line search along the current direction, then the
    /// Fletcher-Reeves update of the direction.
    pub fn step<P: LeastSquares>(&mut self, problem: &P, learning_rate: f64) -> LineSearchOutcome {
        if self.gradient.iter().any(|g| !g.is_finite()) || !self.error.is_finite() {
            return LineSearchOutcome::NonFinite;
        }
        let mut slope = dot(&self.gradient, &self.direction);
        if slope >= 0.0 {
            self.reset_direction();
            slope = dot(&self.gradient, &self.direction);
        }
        if slope == 0.0 {
            return LineSearchOutcome::Stationary;
        }
        let trials = std::iter::once(1.0).chain((0..MAX_BACKTRACKS).map(|k| learning_rate * 0.5f64.powi(k as i32)));
        let mut trial = vec![0.0; self.params.len()];
        for t in trials {
            for ((out, x), p) in trial.iter_mut().zip(&self.params).zip(&self.direction) {
                *out = x + t * p;
            }
            let e = problem.error(&trial);
            if e.is_finite() && e <= self.error + ARMIJO_C * t * slope {
                let (error, gradient) = problem.error_and_gradient(&trial);
                let beta = fletcher_reeves_beta(&gradient, &self.gradient);
                self.params.copy_from_slice(&trial);
                self.error = error;
                self.gradient = gradient;
                self.since_restart += 1;
                if self.since_restart >= self.params.len() {
                    self.reset_direction();
                } else {
                    for (p, g) in self.direction.iter_mut().zip(&self.gradient) {
                        *p = -g + beta * *p;
                    }
                }
                return LineSearchOutcome::Accepted { step: t };
            }
        }
        LineSearchOutcome::Failed
    }
}

pub(crate) fn run_cg<P: LeastSquares>(
    problem: &P,
    params: Vec<f64>,
    config: &TrainerConfig,
) -> (Vec<f64>, TrainingReport) {
    let clock = RunClock::start();
    let mut cg = ConjugateGradient::new(problem, params);
    let mut report = TrainingReport::new(Algorithm::Cg, cg.error());
    for _ in 0..config.max_iterations {
        if target_reached(cg.error(), config) {
            report.stop_reason = StopReason::TargetReached;
            break;
        }
        let was_steepest = cg.is_steepest();
        match cg.step(problem, config.learning_rate) {
            LineSearchOutcome::Accepted { step } => report.push(cg.error(), step, clock.seconds()),
            LineSearchOutcome::Failed => {
                report.line_search_failures += 1;
                report.push(cg.error(), 0.0, clock.seconds());
                if was_steepest {
                    // a failed steepest-descent search repeats identically forever
                    report.stop_reason = StopReason::Stalled;
                    break;
                }
                cg.reset_direction();
            }
            LineSearchOutcome::Stationary => {
                report.stop_reason = StopReason::Stalled;
                break;
            }
            LineSearchOutcome::NonFinite => {
                report.stop_reason = StopReason::NumericalFailure;
                break;
            }
        }
    }
    if report.stop_reason == StopReason::IterationsExhausted && target_reached(cg.error(), config) {
        report.stop_reason = StopReason::TargetReached;
    }
    report.restarts = cg.restarts;
    report.elapsed = clock.elapsed();
    (cg.params, report)
}

pub fn train_cg(net: &mut Network, data: &TrainingSet, config: &TrainerConfig) -> Result<TrainingReport, TrainError> {
    config.validate()?;
    let problem = NetworkProblem::new(net, data)?;
    let (params, report) = run_cg(&problem, net.params().to_vec(), config);
    net.set_params(&params)?;
    Ok(report)
}
