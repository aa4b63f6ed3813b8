use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::{tie_tol, GroupedModel, Method, QResult};
use crate::error::{Error, Result};
use crate::math::seq_log_p;
use crate::model::RankingSequence;

/// Samples per chunk; each chunk draws from its own ChaCha stream so the
/// estimate does not depend on how chunks are scheduled.
const CHUNK: u64 = 1 << 14;

/// Fraction of sequences drawn from the model that are at least as probable
/// as `x`, with its binomial standard error.
pub fn q_montecarlo(grouped: &GroupedModel, x: &RankingSequence, samples: u64, seed: u64) -> Result<QResult> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let ones = grouped.ones_per_group(x)?;
    let target = grouped.log_p_of_counts(&ones);
    let tol = tie_tol(target);

    let groups = grouped.groups();
    let tables: Vec<Vec<f64>> =
        groups.iter().map(|g| (0..=g.len()).map(|k| seq_log_p(g.theta, g.len(), k)).collect()).collect();
    let samplers: Vec<Binomial> = groups
        .iter()
        .map(|g| Binomial::new(g.len() as u64, g.theta).map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect::<Result<_>>()?;

    let chunks = samples.div_ceil(CHUNK);
    let (hits, ties) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut hits, mut ties) = (0u64, 0u64);
            for _ in 0..count {
                let lp: f64 = samplers
                    .iter()
                    .zip(&tables)
                    .map(|(s, t)| t[s.sample(&mut rng) as usize])
                    .sum();
                if lp >= target - tol {
                    hits += 1;
                    if lp <= target + tol {
                        ties += 1;
                    }
                }
            }
            (hits, ties)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let n = samples as f64;
    let q = hits as f64 / n;
    Ok(QResult {
        q,
        target_log_p: target,
        tie_mass: ties as f64 / n,
        method: Method::MonteCarlo,
        mc_stderr: Some((q * (1.0 - q) / n).sqrt()),
        error_bound: None,
        bin_width: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PairId, PairModel, Provenance};
    use crate::qcompute::group_pairs;

    fn grouped(thetas: &[f64]) -> GroupedModel {
        let models: Vec<PairModel> = thetas
            .iter()
            .enumerate()
            .map(|(i, &t)| PairModel {
                pair_id: PairId(format!("p{i}")),
                theta: t,
                flipped: false,
                provenance: Provenance::RatioMle,
            })
            .collect();
        group_pairs(&models, 0.0).unwrap()
    }

    #[test]
    fn single_pair_estimate() {
        let g = grouped(&[0.9]);
        let x: RankingSequence = [("p0".into(), true)].into_iter().collect();
        let r = q_montecarlo(&g, &x, 100_000, 7).unwrap();
        let se = r.mc_stderr.unwrap();
        assert!((r.q - 0.9).abs() <= 3.0 * se, "{} +- {}", r.q, se);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = grouped(&[0.9, 0.7, 0.7, 0.6]);
        let x: RankingSequence = (0..4).map(|i| (PairId(format!("p{i}")), i % 2 == 0)).collect();
        let a = q_montecarlo(&g, &x, 50_000, 11).unwrap();
        let b = q_montecarlo(&g, &x, 50_000, 11).unwrap();
        assert_eq!(a, b);
        let c = q_montecarlo(&g, &x, 50_000, 12).unwrap();
        assert_ne!(a.q, c.q);
    }

    #[test]
    fn zero_samples_rejected() {
        let g = grouped(&[0.9]);
        let x: RankingSequence = [("p0".into(), true)].into_iter().collect();
        assert!(q_montecarlo(&g, &x, 0, 1).is_err());
    }
}
