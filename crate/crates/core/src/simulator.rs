//! Synthetic annotator populations with known ground truth.
//!
//! Everything here is a deterministic function of the spec and seed: pair `i`
//! draws its annotations from ChaCha stream `i + 1` of the spec seed, so the
//! output does not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotationRecord, Choice};
use crate::error::{Error, Result};
use crate::model::{PairId, PairModel, Provenance, RankingSequence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ThetaDistribution {
    Uniform { low: f64, high: f64 },
    /// `(theta, weight)` atoms; weights need not sum to one.
    PointMixture { points: Vec<(f64, f64)> },
    /// `0.5 + 0.5 * Beta`, parameterized by the mean of theta.
    Beta { mean: f64, concentration: f64 },
}

/// Maps a pair's theta to the probabilities of confidence scores 0, 1, 2.
/// Every variant satisfies `q0/2 + 3*q1/4 + q2 = theta` on the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceModel {
    /// Maximum-entropy distribution meeting the constraint.
    MaxEntropy,
    /// Scores 0 and 2 only: annotators are either sure or guessing.
    Polarized,
    /// Mass on score 1 and one neighbour: annotators hedge.
    Hedged,
    /// `weight * Polarized + (1 - weight) * Hedged`.
    Blend { polarized_weight: f64 },
}

impl ConfidenceModel {
    pub fn score_probs(&self, theta: f64) -> [f64; 3] {
        match self {
            ConfidenceModel::MaxEntropy => max_entropy_scores(theta),
            ConfidenceModel::Polarized => [2.0 - 2.0 * theta, 0.0, 2.0 * theta - 1.0],
            ConfidenceModel::Hedged => {
                if theta <= 0.75 {
                    [3.0 - 4.0 * theta, 4.0 * theta - 2.0, 0.0]
                } else {
                    [0.0, 4.0 - 4.0 * theta, 4.0 * theta - 3.0]
                }
            }
            ConfidenceModel::Blend { polarized_weight: w } => {
                let p = ConfidenceModel::Polarized.score_probs(theta);
                let h = ConfidenceModel::Hedged.score_probs(theta);
                [0, 1, 2].map(|i| w * p[i] + (1.0 - w) * h[i])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let ConfidenceModel::Blend { polarized_weight: w } = self {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::InvalidArgument(format!("polarized weight {w} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `q_s ∝ x^s` with `x = exp(lambda / 4)`; the mean constraint reduces to
/// `(1 - theta) x^2 + (3/4 - theta) x + (1/2 - theta) = 0`.
fn max_entropy_scores(theta: f64) -> [f64; 3] {
    if theta <= 0.5 {
        return [1.0, 0.0, 0.0];
    }
    if theta >= 1.0 {
        return [0.0, 0.0, 1.0];
    }
    let (a, b, c) = (1.0 - theta, 0.75 - theta, 0.5 - theta);
    let disc = (b * b - 4.0 * a * c).sqrt();
    // c < 0 < a, so the positive root; pick the cancellation-free form
    let x = if b <= 0.0 { (-b + disc) / (2.0 * a) } else { 2.0 * c / (-b - disc) };
    let z = 1.0 + x + x * x;
    [1.0 / z, x / z, x * x / z]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_pairs: usize,
    pub theta_distribution: ThetaDistribution,
    pub confidence_model: ConfidenceModel,
    pub annotators_per_pair: u32,
    /// When set, first-round votes carry no score and each pair the first
    /// round rated unanimously gets this many extra scored votes.
    #[serde(default)]
    pub second_round: Option<u32>,
    /// Randomly swap the file order of each pair so that the majority choice
    /// is not always `first`.
    #[serde(default)]
    pub random_orientation: bool,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.annotators_per_pair == 0 {
            return bad("annotators_per_pair must be at least 1".into());
        }
        match &self.theta_distribution {
            ThetaDistribution::Uniform { low, high } => {
                if !(0.5 <= *low && low <= high && *high <= 1.0) {
                    return bad(format!("uniform bounds [{low}, {high}] must satisfy 0.5 <= low <= high <= 1"));
                }
            }
            ThetaDistribution::PointMixture { points } => {
                if points.is_empty() {
                    return bad("point mixture needs at least one point".into());
                }
                for &(t, w) in points {
                    if !(0.5..=1.0).contains(&t) || w.is_nan() || w < 0.0 {
                        return bad(format!("point ({t}, {w}) needs theta in [0.5, 1] and weight >= 0"));
                    }
                }
                if points.iter().map(|p| p.1).sum::<f64>() <= 0.0 {
                    return bad("point mixture weights sum to zero".into());
                }
            }
            ThetaDistribution::Beta { mean, concentration } => {
                if !(0.5 < *mean && *mean < 1.0 && *concentration > 0.0) {
                    return bad(format!("beta needs mean in (0.5, 1) and concentration > 0, got {mean}, {concentration}"));
                }
            }
        }
        self.confidence_model.validate()
    }
}

fn draw_theta(dist: &ThetaDistribution, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(match dist {
        ThetaDistribution::Uniform { low, high } => {
            if low == high {
                *low
            } else {
                rng.gen_range(*low..=*high)
            }
        }
        ThetaDistribution::PointMixture { points } => {
            let total: f64 = points.iter().map(|p| p.1).sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = points[points.len() - 1].0;
            for &(t, w) in points {
                if u < w {
                    pick = t;
                    break;
                }
                u -= w;
            }
            pick
        }
        ThetaDistribution::Beta { mean, concentration } => {
            let mu = (mean - 0.5) / 0.5;
            let beta = Beta::new(mu * concentration, (1.0 - mu) * concentration)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            0.5 + 0.5 * beta.sample(rng)
        }
    })
}

fn pair_id(i: usize) -> PairId {
    PairId(format!("pair_{i:05}"))
}

/// Ground-truth models, canonical theta plus orientation.
pub fn sample_population(spec: &PopulationSpec) -> Result<Vec<PairModel>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_pairs)
        .map(|i| {
            let theta = draw_theta(&spec.theta_distribution, &mut rng)?;
            let flipped = spec.random_orientation && rng.gen::<bool>();
            Ok(PairModel { pair_id: pair_id(i), theta, flipped, provenance: Provenance::External })
        })
        .collect()
}

fn draw_score(q: &[f64; 3], rng: &mut ChaCha8Rng) -> u8 {
    let u: f64 = rng.gen();
    if u < q[0] {
        0
    } else if u < q[0] + q[1] || q[2] == 0.0 {
        1
    } else {
        2
    }
}

/// Independent votes per pair, in file orientation. Scores are drawn from
/// the confidence model independently of the realized choice.
pub fn sample_annotations(truth: &[PairModel], spec: &PopulationSpec) -> Result<Vec<AnnotationRecord>> {
    spec.validate()?;
    let per_pair: Vec<Vec<AnnotationRecord>> = truth
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64 + 1);
            let q = spec.confidence_model.score_probs(m.theta);
            let scored_first_round = spec.second_round.is_none();
            let vote = |who: String, scored: bool, rng: &mut ChaCha8Rng| {
                let canonical_first = rng.gen::<f64>() < m.theta;
                let choice = if canonical_first != m.flipped { Choice::First } else { Choice::Second };
                let confidence = scored.then(|| draw_score(&q, rng));
                AnnotationRecord { pair_id: m.pair_id.clone(), annotator_id: who, choice, confidence }
            };
            let mut out: Vec<AnnotationRecord> = (0..spec.annotators_per_pair)
                .map(|j| vote(format!("a{j}"), scored_first_round, &mut rng))
                .collect();
            if let Some(extra) = spec.second_round {
                if out.iter().all(|r| r.choice == out[0].choice) {
                    out.extend((0..extra).map(|j| vote(format!("b{j}"), true, &mut rng)));
                }
            }
            out
        })
        .collect();
    Ok(per_pair.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MachineMode {
    /// Each bit drawn from the pair's theta, like a human.
    Human,
    /// Always the canonical first item.
    Modal,
    /// Modal, with each bit flipped independently at `flip_rate`.
    Adversarial { flip_rate: f64 },
}

/// A canonical-orientation sequence produced by a synthetic predictor.
pub fn sample_machine_sequence(truth: &[PairModel], mode: MachineMode, seed: u64) -> Result<RankingSequence> {
    if let MachineMode::Adversarial { flip_rate } = mode {
        if !(0.0..=1.0).contains(&flip_rate) {
            return Err(Error::InvalidArgument(format!("flip rate {flip_rate} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(truth
        .iter()
        .map(|m| {
            let bit = match mode {
                MachineMode::Human => rng.gen::<f64>() < m.theta,
                MachineMode::Modal => true,
                MachineMode::Adversarial { flip_rate } => rng.gen::<f64>() >= flip_rate,
            };
            (m.pair_id.clone(), bit)
        })
        .collect())
}
