use rayon::prelude::*;

use super::{tie_tol, GroupedModel, Method, QResult};
use crate::error::{Error, Result};
use crate::math::{mass, seq_log_p, LnFactorial};
use crate::model::RankingSequence;

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// All sequences with the same number of ones in every group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    /// Mixed-radix encoding of the per-group one counts.
    pub index: u64,
    /// Log-probability of each single sequence in the block.
    pub log_p: f64,
    /// Log of the number of sequences in the block.
    pub log_m: f64,
}

impl Block {
    pub fn mass(&self) -> f64 {
        mass(self.log_m + self.log_p)
    }
}

/// Blocks sorted by per-sequence probability, most probable first.
#[derive(Clone, Debug)]
pub struct BlockTable {
    blocks: Vec<Block>,
    radices: Vec<u32>,
}

impl BlockTable {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Per-group one counts of a block.
    pub fn k_vector(&self, block: &Block) -> Vec<u32> {
        decode(block.index, &self.radices)
    }

    pub fn total_mass(&self) -> f64 {
        self.blocks.iter().map(Block::mass).sum()
    }
}

fn decode(mut index: u64, radices: &[u32]) -> Vec<u32> {
    radices
        .iter()
        .map(|&r| {
            let k = (index % r as u64) as u32;
            index /= r as u64;
            k
        })
        .collect()
}

/// Builds every block of the grouped model; fails when there are more than
/// `cap` of them.
pub fn enumerate_blocks(grouped: &GroupedModel, cap: u64) -> Result<BlockTable> {
    let needed = grouped.block_count();
    if needed > cap as u128 {
        return Err(Error::Capacity { what: "block count (use the dp method)", needed, cap: cap as u128 });
    }
    let groups = grouped.groups();
    let max_n = groups.iter().map(|g| g.len()).max().unwrap_or(0);
    let lnf = LnFactorial::new(max_n);

    // per group, per k: (log_p, log_m)
    let atoms: Vec<Vec<(f64, f64)>> = groups
        .iter()
        .map(|g| {
            let n = g.len();
            (0..=n).map(|k| (seq_log_p(g.theta, n, k), lnf.ln_choose(n, k))).collect()
        })
        .collect();
    let radices: Vec<u32> = groups.iter().map(|g| g.len() + 1).collect();

    let mut blocks: Vec<Block> = (0..needed as u64)
        .into_par_iter()
        .map(|index| {
            let mut rest = index;
            let (mut log_p, mut log_m) = (0.0, 0.0);
            for (a, &r) in atoms.iter().zip(&radices) {
                let k = (rest % r as u64) as usize;
                rest /= r as u64;
                log_p += a[k].0;
                log_m += a[k].1;
            }
            Block { index, log_p, log_m }
        })
        .collect();
    blocks.par_sort_unstable_by(|a, b| b.log_p.total_cmp(&a.log_p).then(a.index.cmp(&b.index)));
    Ok(BlockTable { blocks, radices })
}

/// Q by summing block masses in descending-probability order down to and
/// including every block tied with the target's.
pub fn q_exact(table: &BlockTable, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
    let ones = grouped.ones_per_group(x)?;
    let target = grouped.log_p_of_counts(&ones);
    let tol = tie_tol(target);
    let threshold = target - tol;

    let mut q = 0.0;
    let mut tie_mass = 0.0;
    let mut included = 0;
    for b in table.blocks.iter().take_while(|b| b.log_p >= threshold) {
        let m = b.mass();
        q += m;
        included += 1;
        if b.log_p <= target + tol {
            tie_mass += m;
        }
    }
    // every sequence counted: Q is 1 by definition, not 1 +- rounding
    if included == table.blocks.len() {
        q = 1.0;
    }
    Ok(QResult {
        q: q.min(1.0),
        target_log_p: target,
        tie_mass,
        method: Method::Exact,
        mc_stderr: None,
        error_bound: None,
        bin_width: None,
    })
}
