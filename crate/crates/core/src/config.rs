use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimatorPolicy;
use crate::qcompute::{MethodParams, DEFAULT_BIN_WIDTH, DEFAULT_ENUMERATION_CAP};

/// Settings shared by the estimate/evaluate/report pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// A sequence is distinguishable when `Q > 1 - epsilon`.
    pub epsilon: f64,
    /// Grid thetas are rounded to before grouping; 0 groups exact values only.
    pub quantization_step: f64,
    pub enumeration_cap: u64,
    pub dp_bin_width: f64,
    pub policy: EstimatorPolicy,
    /// Registered Q method name.
    pub method: String,
    pub mc_samples: u64,
    pub seed: u64,
    /// Lowers theta = 1 to this value before computing Q. Off by default.
    pub theta_ceiling: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 0.1,
            quantization_step: 0.01,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            dp_bin_width: DEFAULT_BIN_WIDTH,
            policy: EstimatorPolicy::default(),
            method: "auto".into(),
            mc_samples: 100_000,
            seed: 0,
            theta_ceiling: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must be in (0, 1), got {}", self.epsilon));
        }
        let q = self.quantization_step;
        if !(q == 0.0 || (1e-6..=0.25).contains(&q)) {
            return bad(format!("quantization step must be 0 or in [1e-6, 0.25], got {q}"));
        }
        if self.enumeration_cap == 0 {
            return bad("enumeration cap must be positive".into());
        }
        if !(self.dp_bin_width > 0.0 && self.dp_bin_width.is_finite()) {
            return bad(format!("bin width must be positive, got {}", self.dp_bin_width));
        }
        if self.policy.tol.is_nan() || self.policy.tol <= 0.0 {
            return bad(format!("estimator tolerance must be positive, got {}", self.policy.tol));
        }
        if self.mc_samples == 0 {
            return bad("Monte Carlo sample count must be positive".into());
        }
        if let Some(c) = self.theta_ceiling {
            if !(0.5..=1.0).contains(&c) {
                return bad(format!("theta ceiling must be in [0.5, 1], got {c}"));
            }
        }
        Ok(())
    }

    pub fn method_params(&self) -> MethodParams {
        MethodParams {
            cap: self.enumeration_cap,
            bin_width: self.dp_bin_width,
            samples: self.mc_samples,
            seed: self.seed,
        }
    }
}
