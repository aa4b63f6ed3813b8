//! Per-pair Bernoulli parameter estimation.
//!
//! Split pairs use the vote ratio. Unanimous pairs, where the ratio collapses
//! to 0 or 1, fall back to the confidence-score likelihood when scores exist.

mod confidence;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairId, PairModel, Provenance};

pub use confidence::{estimate_confidence, log_likelihood, ConfidenceMleSolution, DEFAULT_TOL};

/// Counts of confidence levels 0, 1 and 2 among scored votes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCounts(pub [u32; 3]);

impl ScoreCounts {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Vote tallies for one pair.
///
/// `n` counts every first/second vote; `score_counts`, when present, tallies
/// the scored subset of those votes, so its total never exceeds `n`. Votes
/// without a score make up the difference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub pair_id: PairId,
    pub n: u32,
    pub n_first: u32,
    pub score_counts: Option<ScoreCounts>,
}

impl PairCounts {
    pub fn new(pair_id: impl Into<PairId>, n: u32, n_first: u32) -> Self {
        PairCounts { pair_id: pair_id.into(), n, n_first, score_counts: None }
    }

    pub fn with_scores(mut self, scores: [u32; 3]) -> Self {
        self.score_counts = Some(ScoreCounts(scores));
        self
    }

    pub fn is_unanimous(&self) -> bool {
        self.n_first == self.n || self.n_first == 0
    }

    fn has_scores(&self) -> bool {
        self.score_counts.is_some_and(|s| s.total() > 0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorMode {
    /// Confidence MLE for unanimous scored pairs, ratio MLE otherwise.
    #[default]
    Auto,
    RatioOnly,
}

/// How unscored votes on a unanimous pair enter the confidence likelihood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreMerge {
    /// Only scored votes contribute.
    #[default]
    ScoredOnly,
    /// Unscored votes add one factor of theta each.
    IncludeUnscored,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorPolicy {
    pub mode: EstimatorMode,
    pub merge: ScoreMerge,
    pub tol: f64,
}

impl Default for EstimatorPolicy {
    fn default() -> Self {
        EstimatorPolicy { mode: EstimatorMode::Auto, merge: ScoreMerge::ScoredOnly, tol: DEFAULT_TOL }
    }
}

impl EstimatorPolicy {
    pub fn ratio_only() -> Self {
        EstimatorPolicy { mode: EstimatorMode::RatioOnly, ..Default::default() }
    }
}

/// Ratio MLE `n_first / n`, canonicalized to `[0.5, 1]`.
pub fn estimate_ratio(counts: &PairCounts) -> Result<PairModel> {
    if counts.n == 0 {
        return Err(Error::EmptyPair(counts.pair_id.0.clone()));
    }
    if counts.n_first > counts.n {
        return Err(Error::InvalidArgument(format!(
            "pair `{}`: n_first {} exceeds n {}",
            counts.pair_id, counts.n_first, counts.n
        )));
    }
    let raw = counts.n_first as f64 / counts.n as f64;
    Ok(PairModel::from_raw(counts.pair_id.clone(), raw, Provenance::RatioMle))
}

/// Estimates every pair, keeping input order.
pub fn build_pair_models(all_counts: &[PairCounts], policy: &EstimatorPolicy) -> Result<Vec<PairModel>> {
    let mut seen = HashSet::with_capacity(all_counts.len());
    for c in all_counts {
        if !seen.insert(&c.pair_id) {
            return Err(Error::DuplicatePair(c.pair_id.0.clone()));
        }
    }

    all_counts
        .iter()
        .map(|c| {
            let use_confidence =
                policy.mode == EstimatorMode::Auto && c.n > 0 && c.is_unanimous() && c.has_scores();
            if !use_confidence {
                return estimate_ratio(c);
            }
            let flipped = c.n_first == 0;
            let scores = c.score_counts.expect("checked by has_scores");
            let n = match policy.merge {
                ScoreMerge::ScoredOnly => scores.total(),
                ScoreMerge::IncludeUnscored => c.n,
            };
            let canonical = PairCounts { pair_id: c.pair_id.clone(), n, n_first: n, score_counts: Some(scores) };
            let sol = estimate_confidence(&canonical, policy.tol)?;
            Ok(PairModel { pair_id: c.pair_id.clone(), theta: sol.theta, flipped, provenance: Provenance::ConfidenceMle })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ratio_examples() {
        let m = estimate_ratio(&PairCounts::new("a", 5, 4)).unwrap();
        assert!((m.theta - 0.8).abs() < 1e-15 && !m.flipped);
        assert_eq!(m.provenance, Provenance::RatioMle);

        let m = estimate_ratio(&PairCounts::new("a", 5, 1)).unwrap();
        assert!((m.theta - 0.8).abs() < 1e-15 && m.flipped);

        let m = estimate_ratio(&PairCounts::new("a", 4, 2)).unwrap();
        assert_eq!(m.theta, 0.5);
        assert!(!m.flipped);
    }

    #[test]
    fn ratio_rejects_empty_pair() {
        assert!(matches!(estimate_ratio(&PairCounts::new("a", 0, 0)), Err(Error::EmptyPair(_))));
    }

    #[test]
    fn dispatch_by_unanimity() {
        let input = vec![
            PairCounts::new("u", 10, 10).with_scores([1, 2, 7]),
            PairCounts::new("s", 5, 3).with_scores([1, 2, 2]),
        ];
        let out = build_pair_models(&input, &EstimatorPolicy::default()).unwrap();
        assert_eq!(out[0].provenance, Provenance::ConfidenceMle);
        assert_eq!(out[1].provenance, Provenance::RatioMle);
        assert!((out[1].theta - 0.6).abs() < 1e-15);
        assert_eq!(out[0].pair_id.as_str(), "u");
    }

    #[test]
    fn ratio_only_policy_gives_degenerate_theta() {
        let input = vec![PairCounts::new("u", 10, 10).with_scores([3, 3, 4])];
        let out = build_pair_models(&input, &EstimatorPolicy::ratio_only()).unwrap();
        assert_eq!(out[0].provenance, Provenance::RatioMle);
        assert_eq!(out[0].theta, 1.0);
    }

    #[test]
    fn unanimous_second_choice_is_flipped() {
        let input = vec![PairCounts::new("u", 10, 0).with_scores([0, 0, 10])];
        let out = build_pair_models(&input, &EstimatorPolicy::default()).unwrap();
        assert!(out[0].flipped);
        assert_eq!(out[0].theta, 1.0);
    }

    #[test]
    fn unanimous_without_scores_uses_ratio() {
        let out = build_pair_models(&[PairCounts::new("u", 5, 5)], &EstimatorPolicy::default()).unwrap();
        assert_eq!(out[0].provenance, Provenance::RatioMle);
    }

    #[test]
    fn merge_policy_changes_theta_exponent() {
        // 5 unscored + 10 scored unanimous votes.
        let c = PairCounts::new("u", 15, 15).with_scores([4, 4, 2]);
        let scored = build_pair_models(std::slice::from_ref(&c), &EstimatorPolicy::default()).unwrap();
        let merged = build_pair_models(
            &[c],
            &EstimatorPolicy { merge: ScoreMerge::IncludeUnscored, ..Default::default() },
        )
        .unwrap();
        assert!(merged[0].theta > scored[0].theta);
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(build_pair_models(&[], &EstimatorPolicy::default()).unwrap().is_empty());
        let dup = vec![PairCounts::new("a", 3, 1), PairCounts::new("a", 3, 2)];
        assert!(matches!(build_pair_models(&dup, &EstimatorPolicy::default()), Err(Error::DuplicatePair(_))));
    }

    proptest! {
        #[test]
        fn ratio_is_symmetric(n in 1u32..200, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as u32;
            let a = estimate_ratio(&PairCounts::new("p", n, k)).unwrap();
            let b = estimate_ratio(&PairCounts::new("p", n, n - k)).unwrap();
            prop_assert!(a.theta >= 0.5 && a.theta <= 1.0);
            prop_assert!((a.theta - b.theta).abs() < 1e-12);
            if 2 * k != n {
                prop_assert_ne!(a.flipped, b.flipped);
            }
        }
    }
}
