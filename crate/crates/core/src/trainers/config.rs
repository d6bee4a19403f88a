use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "cg")]
    Cg,
    #[serde(rename = "rprop", alias = "rb")]
    Rprop,
    #[serde(rename = "lm")]
    Lm,
    #[serde(rename = "lm-br", alias = "lm+br")]
    LmBr,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm `{0}` (expected cg, rprop, lm or lm-br)")]
pub struct UnknownAlgorithm(pub String);

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Cg, Algorithm::Rprop, Algorithm::Lm, Algorithm::LmBr];

    /// Row label used in result tables.
    pub fn table_label(self) -> &'static str {
        match self {
            Algorithm::Cg => "CG",
            Algorithm::Rprop => "RB",
            Algorithm::Lm => "LM",
            Algorithm::LmBr => "LM+BR",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Cg => "cg",
            Algorithm::Rprop => "rprop",
            Algorithm::Lm => "lm",
            Algorithm::LmBr => "lm-br",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cg" => Ok(Algorithm::Cg),
            "rprop" | "rb" => Ok(Algorithm::Rprop),
            "lm" => Ok(Algorithm::Lm),
            "lm-br" | "lm+br" | "lm_br" | "lmbr" => Ok(Algorithm::LmBr),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpropParams {
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl Default for RpropParams {
    fn default() -> Self {
        RpropParams { delta0: 0.1, delta_min: 1e-6, delta_max: 50.0, eta_plus: 1.2, eta_minus: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmParams {
    pub mu0: f64,
    pub mu_increase: f64,
    pub mu_decrease: f64,
    pub mu_max: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        LmParams { mu0: 1e-3, mu_increase: 10.0, mu_decrease: 0.1, mu_max: 1e10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrParams {
    pub alpha0: f64,
    pub beta0: f64,
    /// Re-estimate the hyperparameters after every n-th accepted step;
    /// 0 keeps `alpha0`/`beta0` fixed.
    pub reestimate_every: usize,
}

impl Default for BrParams {
    fn default() -> Self {
        BrParams { alpha0: 0.0, beta0: 1.0, reestimate_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub algorithm: Algorithm,
    /// Iteration budget.
    pub max_iterations: usize,
    /// Initial backtracking scale of the CG line search once a unit step fails.
    pub learning_rate: f64,
    pub rprop: RpropParams,
    pub lm: LmParams,
    pub br: BrParams,
    /// Stop as soon as `E <= target_error`.
    pub target_error: Option<f64>,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            algorithm: Algorithm::Rprop,
            max_iterations: 100,
            learning_rate: 0.1,
            rprop: RpropParams::default(),
            lm: LmParams::default(),
            br: BrParams::default(),
            target_error: None,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        TrainerConfig { algorithm, ..Default::default() }
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_error = Some(target);
        self
    }

    // negated comparisons so NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        let r = &self.rprop;
        if !(r.eta_minus > 0.0 && r.eta_minus < 1.0) {
            return bad("rprop.eta_minus must lie in (0, 1)");
        }
        if !(r.eta_plus > 1.0) {
            return bad("rprop.eta_plus must exceed 1");
        }
        if !(r.delta_min > 0.0 && r.delta_min < r.delta0 && r.delta0 < r.delta_max) {
            return bad("rprop steps must satisfy 0 < delta_min < delta0 < delta_max");
        }
        let l = &self.lm;
        if !(l.mu0 > 0.0 && l.mu0 <= l.mu_max) {
            return bad("lm.mu0 must lie in (0, mu_max]");
        }
        if !(l.mu_increase > 1.0 && l.mu_decrease > 0.0 && l.mu_decrease < 1.0) {
            return bad("lm.mu_increase must exceed 1 and lm.mu_decrease lie in (0, 1)");
        }
        if !(self.br.alpha0 >= 0.0 && self.br.beta0 > 0.0) {
            return bad("br.alpha0 must be >= 0 and br.beta0 > 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.target_error.is_some_and(|t| t.is_nan() || t < 0.0) {
            return bad("target_error must be >= 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.max_iterations, 100);
        assert_eq!(c.learning_rate, 0.1);
    }

    #[test]
    fn rejects_broken_constants() {
        let mut c = TrainerConfig::default();
        c.rprop.eta_minus = 1.5;
        assert!(c.validate().is_err());
        let mut c = TrainerConfig::default();
        c.rprop.delta0 = 100.0;
        assert!(c.validate().is_err());
        let mut c = TrainerConfig::default();
        c.lm.mu0 = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn algorithm_tags() {
        assert_eq!("LM+BR".parse::<Algorithm>(), Ok(Algorithm::LmBr));
        assert_eq!("rb".parse::<Algorithm>(), Ok(Algorithm::Rprop));
        assert_eq!("sgd".parse::<Algorithm>(), Err(UnknownAlgorithm("sgd".into())));
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>(), Ok(a));
        }
    }
}
