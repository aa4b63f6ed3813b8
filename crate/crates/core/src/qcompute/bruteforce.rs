use super::{tie_tol, Method, QResult};
use crate::error::{Error, Result};
use crate::math::mass;
use crate::model::{PairModel, RankingSequence};

pub const BRUTE_FORCE_MAX_PAIRS: usize = 20;

/// Q straight from the definition: score all `2^N` sequences and sum those
/// at least as probable as `x`. Works on per-pair thetas, without grouping.
pub fn q_bruteforce(models: &[PairModel], x: &RankingSequence) -> Result<QResult> {
    let n = models.len();
    if n > BRUTE_FORCE_MAX_PAIRS {
        return Err(Error::Capacity {
            what: "brute-force pair count",
            needed: n as u128,
            cap: BRUTE_FORCE_MAX_PAIRS as u128,
        });
    }
    let bits = x.bits_for(models.iter().map(|m| &m.pair_id))?;
    let logs: Vec<(f64, f64)> = models.iter().map(|m| ((1.0 - m.theta).ln(), m.theta.ln())).collect();

    let log_p = |seq: u32| -> f64 {
        logs.iter()
            .enumerate()
            .map(|(i, &(zero, one))| if seq >> i & 1 == 1 { one } else { zero })
            .sum()
    };

    let target_bits = bits.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (b as u32) << i);
    let target = log_p(target_bits);
    let tol = tie_tol(target);

    let mut q = 0.0;
    let mut tie_mass = 0.0;
    let mut all = true;
    for seq in 0..(1u32 << n) {
        let lp = log_p(seq);
        if lp >= target - tol {
            let m = mass(lp);
            q += m;
            if lp <= target + tol {
                tie_mass += m;
            }
        } else {
            all = false;
        }
    }
    if all {
        q = 1.0;
    }
    Ok(QResult {
        q: q.min(1.0),
        target_log_p: target,
        tie_mass,
        method: Method::BruteForce,
        mc_stderr: None,
        error_bound: None,
        bin_width: None,
    })
}
