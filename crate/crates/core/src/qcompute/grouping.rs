use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::seq_log_p;
use crate::model::{PairId, PairModel, Provenance, RankingSequence};

/// Pairs sharing one theta.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub theta: f64,
    pub members: Vec<PairId>,
}

impl Group {
    pub fn len(&self) -> u32 {
        self.members.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Pairs partitioned into groups of identical (possibly quantized) theta.
#[derive(Clone, Debug)]
pub struct GroupedModel {
    groups: Vec<Group>,
    index: HashMap<PairId, usize>,
}

impl GroupedModel {
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn total_pairs(&self) -> usize {
        self.index.len()
    }

    /// Number of blocks `prod(n_g + 1)`, saturating.
    pub fn block_count(&self) -> u128 {
        self.groups.iter().fold(1u128, |acc, g| acc.saturating_mul(g.len() as u128 + 1))
    }

    /// Number of canonical ones per group in `x`.
    pub fn ones_per_group(&self, x: &RankingSequence) -> Result<Vec<u32>> {
        if x.len() != self.total_pairs() {
            return Err(Error::Coverage(format!(
                "sequence has {} pairs, model has {}",
                x.len(),
                self.total_pairs()
            )));
        }
        let mut ones = vec![0u32; self.groups.len()];
        for (pair, bit) in x.iter() {
            let g = self
                .index
                .get(pair)
                .ok_or_else(|| Error::Coverage(format!("pair `{pair}` is not in the model")))?;
            ones[*g] += bit as u32;
        }
        Ok(ones)
    }

    /// Log-probability of a sequence from per-group one counts.
    pub fn log_p_of_counts(&self, ones: &[u32]) -> f64 {
        self.groups.iter().zip(ones).map(|(g, &k)| seq_log_p(g.theta, g.len(), k)).sum()
    }

    /// Lowers every theta above `ceiling` to `ceiling`, merging groups that
    /// collide. Used to keep theta = 1 pairs from producing zero-probability
    /// sequences.
    pub fn with_theta_ceiling(&self, ceiling: f64) -> Result<GroupedModel> {
        if !(0.5..=1.0).contains(&ceiling) {
            return Err(Error::InvalidArgument(format!("theta ceiling {ceiling} outside [0.5, 1]")));
        }
        let models: Vec<PairModel> = self
            .pair_models()
            .into_iter()
            .map(|mut m| {
                m.theta = m.theta.min(ceiling);
                m
            })
            .collect();
        group_pairs(&models, 0.0)
    }

    /// One model per pair carrying its group's theta, in group order.
    pub fn pair_models(&self) -> Vec<PairModel> {
        self.groups
            .iter()
            .flat_map(|g| {
                g.members.iter().map(move |p| PairModel {
                    pair_id: p.clone(),
                    theta: g.theta,
                    flipped: false,
                    provenance: Provenance::External,
                })
            })
            .collect()
    }
}

/// Groups pairs by theta, rounding to the nearest multiple of
/// `quantization_step` first when it is positive. Groups appear in order of
/// first occurrence.
pub fn group_pairs(models: &[PairModel], quantization_step: f64) -> Result<GroupedModel> {
    if !(quantization_step == 0.0 || (1e-6..=0.25).contains(&quantization_step)) {
        return Err(Error::InvalidArgument(format!(
            "quantization step {quantization_step} must be 0 or in [1e-6, 0.25]"
        )));
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut by_theta: HashMap<u64, usize> = HashMap::new();
    let mut index = HashMap::with_capacity(models.len());
    for m in models {
        if !(0.5..=1.0).contains(&m.theta) {
            return Err(Error::InvalidArgument(format!(
                "pair `{}` has theta {} outside [0.5, 1]",
                m.pair_id, m.theta
            )));
        }
        let theta = if quantization_step > 0.0 {
            ((m.theta / quantization_step).round() * quantization_step).clamp(0.5, 1.0)
        } else {
            m.theta
        };
        let g = *by_theta.entry(theta.to_bits()).or_insert_with(|| {
            groups.push(Group { theta, members: Vec::new() });
            groups.len() - 1
        });
        if index.insert(m.pair_id.clone(), g).is_some() {
            return Err(Error::DuplicatePair(m.pair_id.0.clone()));
        }
        groups[g].members.push(m.pair_id.clone());
    }
    Ok(GroupedModel { groups, index })
}

/// Log-probability of `x` under the grouped model; `-inf` when `x` picks the
/// zero-probability side of a theta = 1 pair.
pub fn log_prob(grouped: &GroupedModel, x: &RankingSequence) -> Result<f64> {
    let ones = grouped.ones_per_group(x)?;
    Ok(grouped.log_p_of_counts(&ones))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models(thetas: &[f64]) -> Vec<PairModel> {
        thetas
            .iter()
            .enumerate()
            .map(|(i, &t)| PairModel {
                pair_id: PairId(format!("p{i}")),
                theta: t,
                flipped: false,
                provenance: Provenance::RatioMle,
            })
            .collect()
    }

    fn seq(bits: &[bool]) -> RankingSequence {
        bits.iter().enumerate().map(|(i, &b)| (PairId(format!("p{i}")), b)).collect()
    }

    #[test]
    fn exact_grouping() {
        let g = group_pairs(&models(&[0.8, 0.8, 0.6]), 0.0).unwrap();
        assert_eq!(g.groups().len(), 2);
        assert_eq!((g.groups()[0].theta, g.groups()[0].len()), (0.8, 2));
        assert_eq!((g.groups()[1].theta, g.groups()[1].len()), (0.6, 1));
    }

    #[test]
    fn quantized_grouping() {
        let g = group_pairs(&models(&[0.81, 0.79]), 0.05).unwrap();
        assert_eq!(g.groups().len(), 1);
        assert!((g.groups()[0].theta - 0.8).abs() < 1e-12);
        assert_eq!(g.groups()[0].len(), 2);
    }

    #[test]
    fn block_count_formula() {
        let g = group_pairs(&models(&[0.5, 1.0]), 0.0).unwrap();
        assert_eq!(g.block_count(), 4);
        let g = group_pairs(&models(&[0.5, 0.5, 0.5, 0.7]), 0.0).unwrap();
        assert_eq!(g.block_count(), 8);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(group_pairs(&models(&[0.8]), 0.5).is_err());
        assert!(group_pairs(&models(&[0.8]), 1e-9).is_err());
    }

    #[test]
    fn log_prob_examples() {
        let g = group_pairs(&models(&[0.9]), 0.0).unwrap();
        assert!((log_prob(&g, &seq(&[true])).unwrap() - 0.9f64.ln()).abs() < 1e-15);

        let g = group_pairs(&models(&[0.9, 0.8]), 0.0).unwrap();
        let lp = log_prob(&g, &seq(&[true, false])).unwrap();
        assert!((lp - (0.9f64 * 0.2).ln()).abs() < 1e-12);

        let g = group_pairs(&models(&[1.0]), 0.0).unwrap();
        assert_eq!(log_prob(&g, &seq(&[false])).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn coverage_mismatch() {
        let g = group_pairs(&models(&[0.9, 0.8]), 0.0).unwrap();
        assert!(matches!(log_prob(&g, &seq(&[true])), Err(Error::Coverage(_))));
        let other: RankingSequence = [("p0".into(), true), ("zz".into(), true)].into_iter().collect();
        assert!(matches!(log_prob(&g, &other), Err(Error::Coverage(_))));
    }

    #[test]
    fn theta_ceiling_removes_certainty() {
        let g = group_pairs(&models(&[1.0, 0.8]), 0.0).unwrap();
        let c = g.with_theta_ceiling(1.0 - 1e-12).unwrap();
        assert!(log_prob(&c, &seq(&[false, true])).unwrap().is_finite());
    }
}
