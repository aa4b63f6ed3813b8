//! Name-keyed registry of Q methods.

use std::collections::BTreeMap;

use super::{
    enumerate_blocks, q_bruteforce, q_dp, q_exact, q_montecarlo, GroupedModel, QResult, DEFAULT_BIN_WIDTH,
    DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::model::RankingSequence;

/// One way of computing Q for a sequence under a grouped model.
pub trait QMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult>;
}

/// Knobs shared by the built-in methods; each takes what it needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodParams {
    pub cap: u64,
    pub bin_width: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams { cap: DEFAULT_ENUMERATION_CAP, bin_width: DEFAULT_BIN_WIDTH, samples: 100_000, seed: 0 }
    }
}

pub struct ExactMethod {
    pub cap: u64,
}

impl QMethod for ExactMethod {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
        let table = enumerate_blocks(grouped, self.cap)?;
        q_exact(&table, grouped, x)
    }
}

pub struct DpMethod {
    pub bin_width: f64,
}

impl QMethod for DpMethod {
    fn name(&self) -> &'static str {
        "dp"
    }

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
        q_dp(grouped, x, self.bin_width)
    }
}

pub struct BruteForceMethod;

impl QMethod for BruteForceMethod {
    fn name(&self) -> &'static str {
        "bruteforce"
    }

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
        q_bruteforce(&grouped.pair_models(), x)
    }
}

pub struct MonteCarloMethod {
    pub samples: u64,
    pub seed: u64,
}

impl QMethod for MonteCarloMethod {
    fn name(&self) -> &'static str {
        "montecarlo"
    }

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
        q_montecarlo(grouped, x, self.samples, self.seed)
    }
}

/// Exact enumeration when the block count fits under `cap`, binned
/// convolution otherwise.
pub struct AutoMethod {
    pub exact: ExactMethod,
    pub dp: DpMethod,
}

impl QMethod for AutoMethod {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn compute(&self, grouped: &GroupedModel, x: &RankingSequence) -> Result<QResult> {
        if grouped.block_count() <= self.exact.cap as u128 {
            self.exact.compute(grouped, x)
        } else {
            self.dp.compute(grouped, x)
        }
    }
}

type Factory = Box<dyn Fn(&MethodParams) -> Box<dyn QMethod> + Send + Sync>;

pub struct MethodRegistry {
    factories: BTreeMap<String, Factory>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry { factories: BTreeMap::new() }
    }

    /// `auto`, `exact`, `dp`, `bruteforce` and `montecarlo`.
    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        r.register("auto", |p| {
            Box::new(AutoMethod { exact: ExactMethod { cap: p.cap }, dp: DpMethod { bin_width: p.bin_width } })
        });
        r.register("exact", |p| Box::new(ExactMethod { cap: p.cap }));
        r.register("dp", |p| Box::new(DpMethod { bin_width: p.bin_width }));
        r.register("bruteforce", |_| Box::new(BruteForceMethod));
        r.register("montecarlo", |p| Box::new(MonteCarloMethod { samples: p.samples, seed: p.seed }));
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&MethodParams) -> Box<dyn QMethod> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Box::new(factory));
    }

    pub fn build(&self, name: &str, params: &MethodParams) -> Result<Box<dyn QMethod>> {
        self.factories.get(name).map(|f| f(params)).ok_or_else(|| Error::UnknownMethod(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}
