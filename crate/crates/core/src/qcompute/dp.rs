//! Q as a tail probability, by convolving per-group score distributions.
//!
//! For `Y` drawn from the model, `Q = Pr[log p(Y) >= log p(x)]`. Within a
//! group the log-probability contribution is affine in the number of ones,
//! which is binomial, so each group is a small discrete distribution. Groups
//! are split into two halves; each half is convolved with its values binned
//! to `bin_width`, and the halves are joined by a sorted tail sum.
//!
//! Every binned atom keeps the exact `[lo, hi]` range of the true values
//! merged into it. An atom whose range straddles the threshold is counted in
//! `q` and its mass goes into the error bound, so `q` never undershoots.
//! When a half would need more than a few million bins, its bin width is
//! doubled until it fits; the width actually used is reported.

use rayon::prelude::*;

use super::{tie_tol, GroupedModel, Method, QResult};
use crate::error::{Error, Result};
use crate::math::{mass, seq_log_p, LnFactorial};
use crate::model::RankingSequence;

pub const DEFAULT_BIN_WIDTH: f64 = 1e-6;

/// Atoms lighter than this are dropped and their mass charged to the bound.
const PRUNE_MASS: f64 = 1e-20;

/// Candidate atoms a convolution step may materialize before sorting.
const SPARSE_LIMIT: usize = 1 << 22;

/// Bins of the dense accumulator; the bin width doubles until the span fits.
const DENSE_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug)]
struct Atom {
    lo: f64,
    hi: f64,
    mass: f64,
}

impl Atom {
    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn absorb(&mut self, other: &Atom) {
        self.lo = self.lo.min(other.lo);
        self.hi = self.hi.max(other.hi);
        self.mass += other.mass;
    }
}

struct GroupDist {
    /// (log-probability contribution, binomial mass)
    atoms: Vec<(f64, f64)>,
    min: f64,
    max: f64,
}

impl GroupDist {
    fn new(theta: f64, n: u32, lnf: &LnFactorial) -> Self {
        let atoms: Vec<(f64, f64)> = (0..=n)
            .filter_map(|k| {
                let v = seq_log_p(theta, n, k);
                let m = mass(lnf.ln_choose(n, k) + v);
                (m > 0.0).then_some((v, m))
            })
            .collect();
        let min = atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let max = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        GroupDist { atoms, min, max }
    }
}

#[derive(Default)]
struct Tally {
    lower: f64,
    upper: f64,
    tie: f64,
    excluded_any: bool,
}

struct Threshold {
    target: f64,
    tol: f64,
}

impl Threshold {
    fn low(&self) -> f64 {
        self.target - self.tol
    }

    fn high(&self) -> f64 {
        self.target + self.tol
    }
}

/// Convolves one more group into `atoms`, merging results that share a bin.
/// Small products are expanded and sorted; large ones go through a dense
/// accumulator, widening `width` when the value span needs too many bins.
fn convolve_step(atoms: &[Atom], g: &GroupDist, width: &mut f64) -> Vec<Atom> {
    if atoms.len().saturating_mul(g.atoms.len()) <= SPARSE_LIMIT {
        let w = *width;
        let mut next: Vec<(i64, Atom)> = atoms
            .par_iter()
            .flat_map_iter(|a| {
                g.atoms.iter().map(move |&(v, m)| {
                    let b = Atom { lo: a.lo + v, hi: a.hi + v, mass: a.mass * m };
                    ((b.mid() / w).round() as i64, b)
                })
            })
            .collect();
        next.par_sort_unstable_by(|(ka, a), (kb, b)| {
            ka.cmp(kb).then(a.lo.total_cmp(&b.lo)).then(a.hi.total_cmp(&b.hi)).then(a.mass.total_cmp(&b.mass))
        });
        let mut out: Vec<Atom> = Vec::with_capacity(next.len());
        let mut last_key = None;
        for (k, a) in next {
            match out.last_mut() {
                Some(cur) if last_key == Some(k) => cur.absorb(&a),
                _ => out.push(a),
            }
            last_key = Some(k);
        }
        return out;
    }

    let lo = atoms.iter().map(Atom::mid).fold(f64::INFINITY, f64::min) + g.min;
    let hi = atoms.iter().map(Atom::mid).fold(f64::NEG_INFINITY, f64::max) + g.max;
    while (hi - lo) / *width >= DENSE_LIMIT as f64 {
        *width *= 2.0;
    }
    let w = *width;
    let bins = ((hi - lo) / w) as usize + 1;
    let mut dense = vec![Atom { lo: f64::INFINITY, hi: f64::NEG_INFINITY, mass: 0.0 }; bins];
    for a in atoms {
        let mid = a.mid();
        for &(v, m) in &g.atoms {
            let i = (((mid + v - lo) / w) as usize).min(bins - 1);
            dense[i].absorb(&Atom { lo: a.lo + v, hi: a.hi + v, mass: a.mass * m });
        }
    }
    dense.retain(|a| a.mass > 0.0);
    dense
}

/// Convolves `groups` starting from a point mass at 0. `outside` is the
/// range of everything not in `groups`; atoms whose fate no longer depends on
/// the rest are settled into `tally`, weighted by `scale`.
fn convolve_half(
    groups: &[&GroupDist],
    outside: (f64, f64),
    width: &mut f64,
    th: &Threshold,
    scale: f64,
    tally: &mut Tally,
) -> Vec<Atom> {
    let mut atoms = vec![Atom { lo: 0.0, hi: 0.0, mass: 1.0 }];
    for (i, g) in groups.iter().enumerate() {
        let rest_min: f64 = outside.0 + groups[i + 1..].iter().map(|g| g.min).sum::<f64>();
        let rest_max: f64 = outside.1 + groups[i + 1..].iter().map(|g| g.max).sum::<f64>();
        let next = convolve_step(&atoms, g, width);
        atoms = Vec::with_capacity(next.len());
        for a in next {
            if a.lo + rest_min > th.high() {
                tally.lower += a.mass * scale;
                tally.upper += a.mass * scale;
            } else if a.hi + rest_max < th.low() {
                tally.excluded_any = true;
            } else if a.mass < PRUNE_MASS {
                tally.upper += a.mass * scale;
                tally.tie += a.mass * scale;
                tally.excluded_any = true;
            } else {
                atoms.push(a);
            }
        }
        if atoms.is_empty() {
            break;
        }
    }
    atoms
}

/// Suffix sums of mass over atoms sorted by one endpoint.
struct Sorted {
    keys: Vec<f64>,
    suffix: Vec<f64>,
}

impl Sorted {
    fn new(atoms: &[Atom], endpoint: impl Fn(&Atom) -> f64) -> Self {
        let mut pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (endpoint(a), a.mass)).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut suffix = vec![0.0; pairs.len() + 1];
        for i in (0..pairs.len()).rev() {
            suffix[i] = suffix[i + 1] + pairs[i].1;
        }
        Sorted { keys: pairs.into_iter().map(|p| p.0).collect(), suffix }
    }

    /// Mass of atoms whose key `k` satisfies `pred(k)`, for a predicate that
    /// is false then true along the sorted keys.
    fn mass_where(&self, pred: impl Fn(f64) -> bool) -> (f64, bool) {
        let i = self.keys.partition_point(|&k| !pred(k));
        (self.suffix[i], i > 0)
    }
}

/// Binned-convolution Q. The result is an upper bound on the exact value;
/// `error_bound` bounds the overshoot.
pub fn q_dp(grouped: &GroupedModel, x: &RankingSequence, bin_width: f64) -> Result<QResult> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {bin_width}")));
    }
    let ones = grouped.ones_per_group(x)?;
    let target = grouped.log_p_of_counts(&ones);
    let result = |q: f64, tie: f64, bound: f64, width: f64| QResult {
        q,
        target_log_p: target,
        tie_mass: tie,
        method: Method::Dp,
        mc_stderr: None,
        error_bound: Some(bound),
        bin_width: Some(width),
    };
    if target == f64::NEG_INFINITY {
        return Ok(result(1.0, 0.0, 0.0, bin_width));
    }
    let th = Threshold { target, tol: tie_tol(target) };

    let max_n = grouped.groups().iter().map(|g| g.len()).max().unwrap_or(0);
    let lnf = LnFactorial::new(max_n);
    let dists: Vec<GroupDist> = grouped.groups().iter().map(|g| GroupDist::new(g.theta, g.len(), &lnf)).collect();

    // balance the atom-count product of the two halves, largest groups first
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&a, &b| dists[b].atoms.len().cmp(&dists[a].atoms.len()).then(a.cmp(&b)));
    let (mut half_a, mut half_b) = (Vec::new(), Vec::new());
    let (mut size_a, mut size_b) = (0.0f64, 0.0f64);
    for i in order {
        let s = (dists[i].atoms.len() as f64).ln();
        if size_a <= size_b {
            half_a.push(&dists[i]);
            size_a += s;
        } else {
            half_b.push(&dists[i]);
            size_b += s;
        }
    }

    let mut tally = Tally::default();
    let mut width_a = bin_width;
    let mut width_b = bin_width;
    let b_range = (half_b.iter().map(|g| g.min).sum(), half_b.iter().map(|g| g.max).sum());
    let a_atoms = convolve_half(&half_a, b_range, &mut width_a, &th, 1.0, &mut tally);

    let a_mass: f64 = a_atoms.iter().map(|a| a.mass).sum();
    let a_range = (
        a_atoms.iter().map(|a| a.lo).fold(f64::INFINITY, f64::min),
        a_atoms.iter().map(|a| a.hi).fold(f64::NEG_INFINITY, f64::max),
    );
    let b_atoms = if a_atoms.is_empty() {
        Vec::new()
    } else {
        convolve_half(&half_b, a_range, &mut width_b, &th, a_mass, &mut tally)
    };

    if !b_atoms.is_empty() {
        let by_lo = Sorted::new(&b_atoms, |b| b.lo);
        let by_hi = Sorted::new(&b_atoms, |b| b.hi);
        let partial: Vec<(f64, f64, f64, bool)> = a_atoms
            .par_iter()
            .map(|a| {
                let (certain, _) = by_lo.mass_where(|lo| a.lo + lo >= th.low());
                let (possible, excluded) = by_hi.mass_where(|hi| a.hi + hi >= th.low());
                let (above, _) = by_lo.mass_where(|lo| a.lo + lo > th.high());
                (a.mass * certain, a.mass * possible, a.mass * (possible - above).max(0.0), excluded)
            })
            .collect();
        for (lower, upper, tie, excluded) in partial {
            tally.lower += lower;
            tally.upper += upper;
            tally.tie += tie;
            tally.excluded_any |= excluded;
        }
    }

    let q = if tally.excluded_any { tally.upper.min(1.0) } else { 1.0 };
    let bound = (tally.upper - tally.lower).max(0.0);
    Ok(result(q, tally.tie.min(1.0), bound, width_a.max(width_b)))
}
