/// Table of `ln(k!)` for `k <= max`.
pub(crate) struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub(crate) fn new(max: u32) -> Self {
        let mut t = Vec::with_capacity(max as usize + 1);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            t.push(acc);
        }
        LnFactorial(t)
    }

    pub(crate) fn ln_choose(&self, n: u32, k: u32) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

/// `count * ln(p)` with the `0 * ln 0 = 0` convention.
pub(crate) fn xlogy(count: u32, p: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * p.ln()
    }
}

/// Log-probability of one particular assignment with `k` ones among `n`
/// Bernoulli(`theta`) trials.
pub(crate) fn seq_log_p(theta: f64, n: u32, k: u32) -> f64 {
    xlogy(k, theta) + xlogy(n - k, 1.0 - theta)
}

/// `exp(log_mass)`, flushing values below the smallest normal exponent to 0.
pub(crate) fn mass(log_mass: f64) -> f64 {
    if log_mass > -745.0 {
        log_mass.exp()
    } else {
        0.0
    }
}
