use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Indistinguishable,
    Distinguishable,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Indistinguishable => "Indistinguishable",
            Decision::Distinguishable => "Distinguishable",
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be in (0, 1), got {epsilon}")))
    }
}

/// A sequence is inside the human-typical set iff `q <= 1 - epsilon`.
pub fn decide(q: f64, epsilon: f64) -> Result<Decision> {
    Ok(if exceeds_threshold(q, epsilon)? { Decision::Distinguishable } else { Decision::Indistinguishable })
}

/// Strictly above `1 - epsilon`; the boundary itself is not flagged.
pub fn exceeds_threshold(q: f64, epsilon: f64) -> Result<bool> {
    check_epsilon(epsilon)?;
    Ok(q > 1.0 - epsilon)
}

/// Percentage with one decimal; exactly 1 prints as `100`.
pub fn format_percent(q: f64) -> String {
    if q >= 1.0 {
        "100".to_owned()
    } else {
        format!("{:.1}", 100.0 * q)
    }
}
