//! Levenberg-Marquardt on the un-averaged sum of squares, optionally with
//! Bayesian regularization of the weights.
//!
//! With regularization the minimized objective is
//! `F = beta * E_D + alpha * E_W`, `E_D = 1/2 sum e^2`, `E_W = 1/2 sum w^2`,
//! whose Gauss-Newton Hessian is `beta J^T J + alpha I` and gradient
//! `beta J^T e + alpha w`. Plain LM is the special case `alpha = 0, beta = 1`
//! and runs through exactly the same code.

use crate::linalg::{Cholesky, Matrix, NotPositiveDefinite};
use crate::network::Network;

use super::{
    error_from_residuals, target_reached, Algorithm, BrSummary, LeastSquares, LmParams, NetworkProblem, RunClock,
    StopReason, TrainError, TrainerConfig, TrainingReport, TrainingSet,
};

/// Largest parameter count the dense `n x n` solve accepts.
pub const LM_PARAMETER_LIMIT: usize = 20_000;

/// Solves `(H + mu I) delta = g`. The caller subtracts `delta` from the
/// parameters.
pub fn damped_step(hessian: &Matrix, gradient: &[f64], mu: f64) -> Result<Vec<f64>, NotPositiveDefinite> {
    Ok(damped_factor(hessian, gradient, mu)?.0)
}

fn damped_factor(hessian: &Matrix, gradient: &[f64], mu: f64) -> Result<(Vec<f64>, Cholesky), NotPositiveDefinite> {
    let chol = Cholesky::factor(&hessian.add_diagonal(mu))?;
    Ok((chol.solve(gradient), chol))
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// Evidence-framework hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrState {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BrState {
    /// MacKay update. `inverse_trace` is `tr(A^-1)` for the (possibly damped)
    /// regularized Hessian `A = beta J^T J + alpha I (+ mu I)`:
    /// `gamma = n - alpha * tr(A^-1)`,
    /// `alpha = gamma / (2 E_W)`, `beta = (N - gamma) / (2 E_D)`.
    /// `alpha` is left alone when `E_W = 0`, `beta` when `E_D = 0` or
    /// `gamma >= N`.
    pub fn reestimate(&mut self, inverse_trace: f64, params: &[f64], residuals: &[f64]) {
        let n = params.len() as f64;
        let big_n = residuals.len() as f64;
        // tr(A^-1) < n / alpha, so gamma lies in (0, n]; the clamp only
        // absorbs cancellation once the weights have collapsed towards zero
        let gamma = if self.alpha == 0.0 { n } else { (n - self.alpha * inverse_trace).clamp(0.0, n) };
        self.gamma = gamma;
        let e_w = half_sq(params);
        let e_d = half_sq(residuals);
        if e_w > 0.0 {
            self.alpha = gamma / (2.0 * e_w);
        }
        if e_d > 0.0 && big_n > gamma {
            self.beta = (big_n - gamma) / (2.0 * e_d);
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevenbergMarquardt {
    params: Vec<f64>,
    residuals: Vec<f64>,
    jacobian: Matrix,
    pub mu: f64,
    pub hyper: BrState,
    lm: LmParams,
    /// Factor of the damped Hessian behind the last accepted step.
    last_factor: Option<Factor>,
}

/// Factored damped system `A = beta J^T J + c I` with `c = alpha + mu`.
///
/// With fewer residuals than parameters the `N x N` matrix
/// `M = J J^T + (c / beta) I` is factored instead and `A^-1` applied through
/// the Woodbury identity. Both forms give the same step up to rounding.
#[derive(Debug, Clone)]
enum Factor {
    Primal(Cholesky),
    Dual { m: Cholesky, c: f64, beta: f64, n: usize },
}

impl Factor {
    fn inverse_trace(&self) -> f64 {
        match self {
            Factor::Primal(chol) => chol.inverse_trace(),
            // tr(A^-1) = (n - N + (c / beta) tr(M^-1)) / c
            Factor::Dual { m, c, beta, n } => (*n as f64 - m.dim() as f64 + c / beta * m.inverse_trace()) / c,
        }
    }
}

/// Per-iteration quantities shared by every damping trial.
enum System {
    Primal {
        hessian: Matrix,
        gradient: Vec<f64>,
    },
    /// `k = J J^T`, `rhs = e - (alpha / c) J w` is rebuilt per trial.
    Dual {
        k: Matrix,
        jw: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LmOutcome {
    Accepted,
    /// Damping passed `mu_max` without finding a decrease.
    Stalled,
}

impl LevenbergMarquardt {
    pub fn new<P: LeastSquares>(problem: &P, params: Vec<f64>, lm: LmParams, hyper: BrState) -> Self {
        let (residuals, jacobian) = problem.jacobian(&params);
        LevenbergMarquardt { params, residuals, jacobian, mu: lm.mu0, hyper, lm, last_factor: None }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn jacobian(&self) -> &Matrix {
        &self.jacobian
    }

    pub fn objective(&self) -> f64 {
        self.objective_at(&self.params, &self.residuals)
    }

    fn objective_at(&self, params: &[f64], residuals: &[f64]) -> f64 {
        self.hyper.beta * half_sq(residuals) + self.hyper.alpha * half_sq(params)
    }

    fn system(&self) -> System {
        let BrState { alpha, beta, .. } = self.hyper;
        if self.jacobian.rows < self.jacobian.cols {
            System::Dual { k: self.jacobian.row_gram(), jw: self.jacobian.mul_vec(&self.params) }
        } else {
            let hessian = self.jacobian.gram().scaled(beta).add_diagonal(alpha);
            let gradient = self
                .jacobian
                .transpose_mul(&self.residuals)
                .iter()
                .zip(&self.params)
                .map(|(g, w)| beta * g + alpha * w)
                .collect();
            System::Primal { hessian, gradient }
        }
    }

    /// Solves for the step at damping `mu`.
    fn solve(&self, system: &System, mu: f64) -> Result<(Vec<f64>, Factor), NotPositiveDefinite> {
        let BrState { alpha, beta, .. } = self.hyper;
        match system {
            System::Primal { hessian, gradient } => {
                let (delta, chol) = damped_factor(hessian, gradient, mu)?;
                Ok((delta, Factor::Primal(chol)))
            }
            System::Dual { k, jw } => {
                // A^-1 (beta J^T e + alpha w)
                //   = J^T M^-1 (e - (alpha / c) J w) + (alpha / c) w
                let c = alpha + mu;
                let m = Cholesky::factor(&k.add_diagonal(c / beta))?;
                let ratio = alpha / c;
                let rhs: Vec<f64> = self.residuals.iter().zip(jw).map(|(e, v)| e - ratio * v).collect();
                let mut delta = self.jacobian.transpose_mul(&m.solve(&rhs));
                for (d, w) in delta.iter_mut().zip(&self.params) {
                    *d += ratio * w;
                }
                Ok((delta, Factor::Dual { m, c, beta, n: self.params.len() }))
            }
        }
    }

    /// Tries damped steps with growing `mu` until the objective decreases.
    /// Returns the outcome and the number of rejected trials.
    pub fn step<P: LeastSquares>(&mut self, problem: &P) -> (LmOutcome, usize) {
        let system = self.system();
        let current = self.objective();
        let mut rejected = 0;
        while self.mu <= self.lm.mu_max {
            if let Ok((delta, factor)) = self.solve(&system, self.mu) {
                let trial: Vec<f64> = self.params.iter().zip(&delta).map(|(x, d)| x - d).collect();
                let e = problem.residuals(&trial);
                let value = self.objective_at(&trial, &e);
                if value.is_finite() && value < current {
                    self.mu = (self.mu * self.lm.mu_decrease).max(f64::MIN_POSITIVE);
                    let (residuals, jacobian) = problem.jacobian(&trial);
                    self.params = trial;
                    self.residuals = residuals;
                    self.jacobian = jacobian;
                    self.last_factor = Some(factor);
                    return (LmOutcome::Accepted, rejected);
                }
            }
            rejected += 1;
            self.mu *= self.lm.mu_increase;
        }
        (LmOutcome::Stalled, rejected)
    }

    /// Re-estimates the hyperparameters with the factor of the last accepted
    /// step; a no-op before any step was accepted.
    pub fn reestimate(&mut self) {
        if let Some(factor) = &self.last_factor {
            self.hyper.reestimate(factor.inverse_trace(), &self.params, &self.residuals);
        }
    }
}

pub(crate) fn run_lm<P: LeastSquares>(
    problem: &P,
    params: Vec<f64>,
    config: &TrainerConfig,
    regularize: bool,
) -> (Vec<f64>, TrainingReport) {
    let clock = RunClock::start();
    let hyper = if regularize {
        BrState { alpha: config.br.alpha0, beta: config.br.beta0, gamma: params.len() as f64 }
    } else {
        BrState { alpha: 0.0, beta: 1.0, gamma: params.len() as f64 }
    };
    let reestimate_every = if regularize { config.br.reestimate_every } else { 0 };
    let algorithm = if regularize { Algorithm::LmBr } else { Algorithm::Lm };
    let mut lm = LevenbergMarquardt::new(problem, params, config.lm, hyper);
    let pats = problem.pattern_count();
    let mut error = error_from_residuals(lm.residuals(), pats);
    let mut report = TrainingReport::new(algorithm, error);
    let mut accepted = 0usize;
    for _ in 0..config.max_iterations {
        if target_reached(error, config) {
            report.stop_reason = StopReason::TargetReached;
            break;
        }
        if !error.is_finite() {
            report.stop_reason = StopReason::NumericalFailure;
            break;
        }
        let (outcome, rejected) = lm.step(problem);
        report.rejected_steps += rejected;
        if outcome == LmOutcome::Stalled {
            report.stop_reason = StopReason::Stalled;
            break;
        }
        accepted += 1;
        if reestimate_every > 0 && accepted.is_multiple_of(reestimate_every) {
            lm.reestimate();
            report.gamma_trace.push(lm.hyper.gamma);
        }
        error = error_from_residuals(lm.residuals(), pats);
        report.push(error, lm.mu, clock.seconds());
    }
    if report.stop_reason == StopReason::IterationsExhausted && target_reached(error, config) {
        report.stop_reason = StopReason::TargetReached;
    }
    if regularize {
        report.br = Some(BrSummary {
            alpha: lm.hyper.alpha,
            beta: lm.hyper.beta,
            gamma: lm.hyper.gamma,
            weight_sq_sum: 2.0 * half_sq(lm.params()),
        });
    }
    report.elapsed = clock.elapsed();
    (lm.params, report)
}

fn train_lm_impl(
    net: &mut Network,
    data: &TrainingSet,
    config: &TrainerConfig,
    regularize: bool,
) -> Result<TrainingReport, TrainError> {
    config.validate()?;
    if net.param_count() > LM_PARAMETER_LIMIT {
        return Err(TrainError::TooManyParameters { params: net.param_count(), limit: LM_PARAMETER_LIMIT });
    }
    let problem = NetworkProblem::new(net, data)?;
    let (params, report) = run_lm(&problem, net.params().to_vec(), config, regularize);
    net.set_params(&params)?;
    Ok(report)
}

pub fn train_lm(net: &mut Network, data: &TrainingSet, config: &TrainerConfig) -> Result<TrainingReport, TrainError> {
    train_lm_impl(net, data, config, false)
}

pub fn train_lm_br(
    net: &mut Network,
    data: &TrainingSet,
    config: &TrainerConfig,
) -> Result<TrainingReport, TrainError> {
    train_lm_impl(net, data, config, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::cg::tests::{line_fit, normal_equations_2};

    #[test]
    fn newton_step_on_one_parameter_is_exact() {
        // y = w x, data {(1, 2)}, w = 0: J = [1], e = [-2]
        let j = Matrix::from_rows(&[vec![1.0]]);
        let e = [0.0 * 1.0 - 2.0];
        let step = damped_step(&j.gram(), &j.transpose_mul(&e), 0.0).unwrap();
        assert_eq!(0.0 - step[0], 2.0);
    }

    #[test]
    fn large_damping_is_small_gradient_step() {
        let j = Matrix::from_rows(&[vec![1.0]]);
        let g = j.transpose_mul(&[-2.0]);
        let mu = 1e6;
        let step = damped_step(&j.gram(), &g, mu).unwrap();
        assert!((step[0] - g[0] / mu).abs() < 1e-11);
    }

    #[test]
    fn one_step_reaches_normal_equation_solution() {
        let p = line_fit();
        let oracle = normal_equations_2(&p);
        let mut lm = LevenbergMarquardt::new(
            &p,
            vec![0.0, 0.0],
            LmParams { mu0: 1e-14, ..Default::default() },
            BrState { alpha: 0.0, beta: 1.0, gamma: 2.0 },
        );
        assert_eq!(lm.step(&p).0, LmOutcome::Accepted);
        assert!((lm.params()[0] - oracle[0]).abs() < 1e-8);
        assert!((lm.params()[1] - oracle[1]).abs() < 1e-8);
    }

    #[test]
    fn gamma_is_bounded() {
        let p = line_fit();
        let (e, j) = p.jacobian(&[0.3, 0.4]);
        for (alpha, beta) in [(0.0, 1.0), (1e-6, 1.0), (1.0, 1.0), (1e6, 1e-3)] {
            let mut s = BrState { alpha, beta, gamma: 0.0 };
            let h = Cholesky::factor(&j.gram().scaled(beta).add_diagonal(alpha + 1e-3)).unwrap();
            s.reestimate(h.inverse_trace(), &[0.3, 0.4], &e);
            assert!(s.gamma >= 0.0 && s.gamma <= 2.0, "{s:?}");
        }
    }

    #[test]
    fn rounding_past_zero_keeps_alpha_nonnegative() {
        let mut s = BrState { alpha: 2.0, beta: 1.0, gamma: 0.0 };
        // tr(A^-1) a hair above n / alpha, as happens for collapsed weights
        s.reestimate(1.0 + 1e-15, &[1e-16, -1e-16], &[0.5, 0.1, -0.2]);
        assert_eq!(s.gamma, 0.0);
        assert!(s.alpha >= 0.0);
    }

    #[test]
    fn dual_and_primal_steps_agree() {
        // 3 residuals, 5 parameters: the dual path is taken
        let rows = vec![vec![1.0, 0.5, -0.3, 0.2, 0.0], vec![0.1, -1.0, 0.4, 0.0, 0.7], vec![0.3, 0.2, 0.9, -0.5, 0.1]];
        let jac = Matrix::from_rows(&rows);
        let w = vec![0.2, -0.1, 0.4, 0.3, -0.6];
        let e = vec![0.5, -0.25, 0.8];
        let (alpha, beta, mu) = (0.7, 2.5, 1e-3);
        let lm = LevenbergMarquardt {
            params: w.clone(),
            residuals: e.clone(),
            jacobian: jac.clone(),
            mu,
            hyper: BrState { alpha, beta, gamma: 0.0 },
            lm: LmParams::default(),
            last_factor: None,
        };
        let (dual, factor) = lm.solve(&lm.system(), mu).unwrap();
        assert!(matches!(factor, Factor::Dual { .. }));

        let hessian = jac.gram().scaled(beta).add_diagonal(alpha);
        let g: Vec<f64> = jac.transpose_mul(&e).iter().zip(&w).map(|(g, w)| beta * g + alpha * w).collect();
        let primal = damped_step(&hessian, &g, mu).unwrap();
        for (a, b) in dual.iter().zip(&primal) {
            assert!((a - b).abs() < 1e-10, "{dual:?} vs {primal:?}");
        }
        let direct = Cholesky::factor(&hessian.add_diagonal(mu)).unwrap().inverse_trace();
        assert!((factor.inverse_trace() - direct).abs() < 1e-8 * direct);
    }

    #[test]
    fn stalls_at_exact_optimum() {
        let p = line_fit();
        let oracle = normal_equations_2(&p);
        let mut config = TrainerConfig::new(Algorithm::Lm);
        config.lm.mu_max = 1e3;
        let (_, report) = run_lm(&p, oracle.to_vec(), &config, false);
        assert_eq!(report.stop_reason, StopReason::Stalled);
    }
}
