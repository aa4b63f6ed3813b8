//! Percentile value Q of a ranking sequence under the grouped Bernoulli model.
//!
//! Q is the total probability of all sequences at least as probable as the
//! target. Four interchangeable methods compute it and are available through
//! [`MethodRegistry`] by name: exact block enumeration, binned convolution,
//! brute force over all sequences, and Monte Carlo sampling.

mod blocks;
mod bruteforce;
mod decision;
mod dp;
mod grouping;
mod montecarlo;
mod registry;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use blocks::{enumerate_blocks, q_exact, Block, BlockTable, DEFAULT_ENUMERATION_CAP};
pub use bruteforce::{q_bruteforce, BRUTE_FORCE_MAX_PAIRS};
pub use decision::{decide, exceeds_threshold, format_percent, Decision};
pub use dp::{q_dp, DEFAULT_BIN_WIDTH};
pub use grouping::{group_pairs, log_prob, Group, GroupedModel};
pub use montecarlo::q_montecarlo;
pub use registry::{AutoMethod, BruteForceMethod, DpMethod, ExactMethod, MethodParams, MethodRegistry, MonteCarloMethod, QMethod};

/// Relative tolerance under which two log-probabilities count as tied.
pub const TIE_TOL: f64 = 1e-9;

pub(crate) fn tie_tol(target: f64) -> f64 {
    if target.is_finite() {
        TIE_TOL * target.abs().max(1.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    Dp,
    BruteForce,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Dp => "dp",
            Method::BruteForce => "bruteforce",
            Method::MonteCarlo => "montecarlo",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QResult {
    /// Fraction in `(0, 1]`.
    pub q: f64,
    pub target_log_p: f64,
    /// Probability of all sequences tied with the target. For the binned
    /// method this is an upper bound.
    pub tie_mass: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    /// For the binned method, `q` is an upper bound on the exact value and
    /// exceeds it by at most this amount.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    /// Bin width the binned method ended up using.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}
