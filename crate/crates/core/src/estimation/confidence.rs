//! Confidence-score MLE for unanimous pairs.
//!
//! The likelihood is `theta^n * q0^n0 * q1^n1 * q2^n2` with `q` on the simplex
//! and `q0/2 + 3*q1/4 + q2 = theta`. Eliminating `q0` and `q1` leaves
//! `(theta, q2)` on the polygon `theta in [1/2, 1]`,
//! `max(0, 4*theta - 3) <= q2 <= 2*theta - 1`, where the log-likelihood is
//! jointly concave. A coarse grid locates the optimum and a profile search
//! over theta (exact line maximization in q2 at each theta) refines it.

use serde::{Deserialize, Serialize};

use super::PairCounts;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

const GRID_STEP: f64 = 1e-3;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceMleSolution {
    pub theta: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub log_likelihood: f64,
}

/// Score probabilities implied by `(theta, q2)`.
fn score_probs(theta: f64, q2: f64) -> [f64; 3] {
    [3.0 - 4.0 * theta + q2, 4.0 * theta - 2.0 - 2.0 * q2, q2]
}

fn q2_range(theta: f64) -> (f64, f64) {
    let lo = (4.0 * theta - 3.0).max(0.0);
    let hi = (2.0 * theta - 1.0).max(lo);
    (lo, hi)
}

fn term(count: u32, p: f64) -> f64 {
    if count == 0 {
        0.0
    } else if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        count as f64 * p.ln()
    }
}

/// Log of `theta^n * q0^n0 * q1^n1 * q2^n2`; levels with zero count are
/// skipped, so a zero probability there is allowed.
pub fn log_likelihood(n: u32, scores: [u32; 3], theta: f64, q: [f64; 3]) -> f64 {
    term(n, theta) + term(scores[0], q[0]) + term(scores[1], q[1]) + term(scores[2], q[2])
}

struct Objective {
    n: u32,
    scores: [u32; 3],
}

impl Objective {
    fn eval(&self, theta: f64, q2: f64) -> f64 {
        log_likelihood(self.n, self.scores, theta, score_probs(theta, q2))
    }

    /// Maximizer of the (concave) objective in q2 for fixed theta. The
    /// derivative `n0/q0 - 2*n1/q1 + n2/q2` is decreasing, so bisect its sign.
    fn best_q2(&self, theta: f64) -> f64 {
        let (mut lo, mut hi) = q2_range(theta);
        if hi - lo <= 0.0 {
            return lo;
        }
        let [n0, n1, n2] = self.scores.map(|c| c as f64);
        let slope = |q2: f64| {
            let [q0, q1, q2] = score_probs(theta, q2);
            let mut d = 0.0;
            if n0 > 0.0 {
                d += n0 / q0;
            }
            if n1 > 0.0 {
                d -= 2.0 * n1 / q1;
            }
            if n2 > 0.0 {
                d += n2 / q2;
            }
            d
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let d = slope(mid);
            if d.is_nan() {
                break;
            }
            if d > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // the bracket ends may hold the maximum when it sits on a boundary
        let mid = 0.5 * (lo + hi);
        [lo, mid, hi]
            .into_iter()
            .fold((f64::NEG_INFINITY, mid), |best, q| {
                let v = self.eval(theta, q);
                if v > best.0 { (v, q) } else { best }
            })
            .1
    }

    fn profile(&self, theta: f64) -> (f64, f64) {
        let q2 = self.best_q2(theta);
        (self.eval(theta, q2), q2)
    }
}

/// Maximizes the confidence-score likelihood of a canonical unanimous pair.
///
/// `counts.n` is the exponent of theta; it may exceed the number of scored
/// votes when unscored votes are merged in.
pub fn estimate_confidence(counts: &PairCounts, tol: f64) -> Result<ConfidenceMleSolution> {
    let scores = match counts.score_counts {
        Some(s) if s.total() > 0 => s,
        _ => return Err(Error::MissingScores(counts.pair_id.0.clone())),
    };
    if counts.n == 0 {
        return Err(Error::EmptyPair(counts.pair_id.0.clone()));
    }
    if counts.n_first != counts.n {
        return Err(Error::WrongEstimator { pair: counts.pair_id.0.clone(), n: counts.n, n_first: counts.n_first });
    }
    if scores.total() > counts.n {
        return Err(Error::InvalidArgument(format!(
            "pair `{}`: {} scored votes but only {} votes",
            counts.pair_id,
            scores.total(),
            counts.n
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }

    let obj = Objective { n: counts.n, scores: scores.0 };

    // coarse grid over the feasible polygon
    let steps = (0.5 / GRID_STEP).round() as usize;
    let mut best = (f64::NEG_INFINITY, 0.5, 0.0);
    for i in 0..=steps {
        let theta = 0.5 + i as f64 * GRID_STEP;
        let (lo, hi) = q2_range(theta);
        let mut q2 = lo;
        loop {
            let v = obj.eval(theta, q2);
            if v > best.0 {
                best = (v, theta, q2);
            }
            if q2 >= hi {
                break;
            }
            q2 = (q2 + GRID_STEP).min(hi);
        }
    }

    // golden-section on the concave profile, bracketed around the grid optimum
    let mut a = (best.1 - GRID_STEP).max(0.5);
    let mut b = (best.1 + GRID_STEP).min(1.0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = obj.profile(c).0;
    let mut fd = obj.profile(d).0;
    let mut last = fc.max(fd);
    for _ in 0..500 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = obj.profile(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = obj.profile(d).0;
        }
        let current = fc.max(fd);
        let improvement = current - last;
        last = current;
        if b - a < tol && improvement.abs() < tol {
            break;
        }
    }

    let mut cand = (best.0, best.1, best.2);
    for theta in [a, c, d, b] {
        let (v, q2) = obj.profile(theta);
        if v > cand.0 {
            cand = (v, theta, q2);
        }
    }
    let (log_likelihood, theta, q2) = cand;
    let q = score_probs(theta, q2).map(|p| p.clamp(0.0, 1.0));
    Ok(ConfidenceMleSolution { theta, q0: q[0], q1: q[1], q2: q[2], log_likelihood })
}
