#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rankq::{PairId, PairModel, Provenance, RankingSequence};

pub const GRID: [f64; 11] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];

/// A model with at most `max_pairs` pairs spread over 1 to `max_groups`
/// distinct thetas, drawn from the 0.05 grid or uniformly from `[0.5, 1]`.
/// Roughly half the pairs are stored in swapped orientation.
pub fn random_model<R: Rng>(rng: &mut R, max_pairs: usize, max_groups: usize, on_grid: bool) -> Vec<PairModel> {
    let groups = rng.gen_range(1..=max_groups);
    let n = rng.gen_range(groups..=max_pairs);
    let thetas: Vec<f64> = (0..groups)
        .map(|_| if on_grid { *GRID.choose(rng).unwrap() } else { rng.gen_range(0.5..=1.0) })
        .collect();
    let mut assignment: Vec<usize> = (0..n).map(|i| if i < groups { i } else { rng.gen_range(0..groups) }).collect();
    assignment.shuffle(rng);
    assignment
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let theta = thetas[g];
            let raw = if rng.gen_bool(0.5) { theta } else { 1.0 - theta };
            PairModel::from_raw(PairId::new(format!("p{i:02}")), raw, Provenance::External)
        })
        .collect()
}

pub fn random_sequence<R: Rng>(rng: &mut R, models: &[PairModel]) -> RankingSequence {
    models.iter().map(|m| (m.pair_id.clone(), rng.gen_bool(0.5))).collect()
}

pub fn human_sequence<R: Rng>(rng: &mut R, models: &[PairModel]) -> RankingSequence {
    models.iter().map(|m| (m.pair_id.clone(), rng.gen_bool(m.theta))).collect()
}

fn seq_prob(models: &[PairModel], bits: impl Fn(usize) -> bool) -> f64 {
    models.iter().enumerate().map(|(i, m)| if bits(i) { m.theta } else { 1.0 - m.theta }).product()
}

/// Plain-probability enumeration of every sequence, independent of the
/// library's log-space code. Returns `(q, tie_mass)`.
pub fn naive_q(models: &[PairModel], x: &RankingSequence) -> (f64, f64) {
    let target = seq_prob(models, |i| x.get(&models[i].pair_id).unwrap());
    let mut q = 0.0;
    let mut tie = 0.0;
    for mask in 0u32..(1 << models.len()) {
        let p = seq_prob(models, |i| mask >> i & 1 == 1);
        if (p - target).abs() <= 1e-12 * target.max(1e-300) {
            tie += p;
            q += p;
        } else if p > target {
            q += p;
        }
    }
    (q, tie)
}
