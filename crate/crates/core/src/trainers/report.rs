use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    IterationsExhausted,
    TargetReached,
    /// No step could reduce the objective (LM damping ceiling, CG line
    /// search failing along steepest descent, zero gradient).
    Stalled,
    NumericalFailure,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub error: f64,
    /// Algorithm-specific scalar: CG step length, mean RPROP step size, or
    /// the LM damping after the iteration.
    pub aux: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrSummary {
    pub alpha: f64,
    pub beta: f64,
    /// Effective number of parameters.
    pub gamma: f64,
    pub weight_sq_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub algorithm: Algorithm,
    pub initial_error: f64,
    pub records: Vec<IterationRecord>,
    pub final_error: f64,
    pub elapsed: Duration,
    pub stop_reason: StopReason,
    /// CG direction resets to steepest descent.
    pub restarts: usize,
    /// CG line searches that found no acceptable step.
    pub line_search_failures: usize,
    /// LM tentative steps rejected.
    pub rejected_steps: usize,
    pub br: Option<BrSummary>,
    /// Effective parameter count after every hyperparameter re-estimation.
    pub gamma_trace: Vec<f64>,
}

impl TrainingReport {
    pub(crate) fn new(algorithm: Algorithm, initial_error: f64) -> Self {
        TrainingReport {
            algorithm,
            initial_error,
            records: Vec::new(),
            final_error: initial_error,
            elapsed: Duration::ZERO,
            stop_reason: StopReason::IterationsExhausted,
            restarts: 0,
            line_search_failures: 0,
            rejected_steps: 0,
            br: None,
            gamma_trace: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, error: f64, aux: f64, elapsed_secs: f64) {
        self.records.push(IterationRecord { iteration: self.records.len() + 1, error, aux, elapsed_secs });
        self.final_error = error;
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn error_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn training_seconds(&self) -> f64 {
        self.elapsed.as_secs_f64()
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.elapsed = Duration::ZERO;
        r.records.iter_mut().for_each(|rec| rec.elapsed_secs = 0.0);
        r
    }

    fn aux_name(&self) -> &'static str {
        match self.algorithm {
            Algorithm::Cg => "step",
            Algorithm::Rprop => "mean_delta",
            Algorithm::Lm | Algorithm::LmBr => "mu",
        }
    }

    /// Tab-separated log: a header line then one line per iteration.
    pub fn to_log(&self) -> String {
        let mut out = format!("# algorithm={} initial_error={:e}\n", self.algorithm, self.initial_error);
        let _ = writeln!(out, "iteration\terror\t{}\telapsed_secs", self.aux_name());
        for r in &self.records {
            let _ = writeln!(out, "{}\t{:e}\t{:e}\t{:.6}", r.iteration, r.error, r.aux, r.elapsed_secs);
        }
        out
    }

    pub fn summary(&self) -> TrainingSummary {
        TrainingSummary {
            algorithm: self.algorithm,
            iterations: self.iterations(),
            initial_error: self.initial_error,
            final_error: self.final_error,
            training_seconds: self.training_seconds(),
            stop_reason: self.stop_reason,
            br: self.br,
        }
    }
}

/// Machine-readable record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
    pub training_seconds: f64,
    pub stop_reason: StopReason,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub br: Option<BrSummary>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_has_one_line_per_iteration() {
        let mut r = TrainingReport::new(Algorithm::Lm, 0.5);
        r.push(0.25, 1e-4, 0.01);
        r.push(0.125, 1e-5, 0.02);
        let log = r.to_log();
        assert_eq!(log.lines().count(), 4);
        assert!(log.lines().nth(1).unwrap().ends_with("mu\telapsed_secs"));
        assert_eq!(r.error_trace(), vec![0.25, 0.125]);
        assert_eq!(r.final_error, 0.125);
        let json = serde_json::to_string(&r.summary()).unwrap();
        let back: TrainingSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r.summary());
        assert!(json.contains("\"iterations-exhausted\""));
    }
}
