//! Domain types shared by the estimation, grouping and evaluation stages.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque identifier of an item pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub String);

impl PairId {
    pub fn new(id: impl Into<String>) -> Self {
        PairId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PairId {
    fn from(s: &str) -> Self {
        PairId(s.to_owned())
    }
}

impl From<String> for PairId {
    fn from(s: String) -> Self {
        PairId(s)
    }
}

/// Which estimator produced a [`PairModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    RatioMle,
    ConfidenceMle,
    /// Supplied from outside the estimators: a targets file or the simulator.
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::RatioMle => "ratio",
            Provenance::ConfidenceMle => "confidence",
            Provenance::External => "external",
        })
    }
}

/// Canonical Bernoulli parameter of one pair.
///
/// `theta` is the probability that a human picks the canonical first item and
/// always lies in `[0.5, 1]`. `flipped` records whether the canonical order is
/// the reverse of the order in the source files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub pair_id: PairId,
    pub theta: f64,
    pub flipped: bool,
    pub provenance: Provenance,
}

impl PairModel {
    /// Canonicalizes a raw first-item probability. A raw value of exactly 0.5
    /// keeps the original orientation.
    pub fn from_raw(pair_id: PairId, raw: f64, provenance: Provenance) -> Self {
        let (theta, flipped) = if raw < 0.5 { (1.0 - raw, true) } else { (raw, false) };
        PairModel { pair_id, theta, flipped, provenance }
    }
}

/// An N-bit choice sequence in canonical orientation: `true` means the
/// canonical first item was chosen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankingSequence {
    choices: BTreeMap<PairId, bool>,
}

impl RankingSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails on a repeated pair id.
    pub fn insert(&mut self, pair: PairId, bit: bool) -> Result<()> {
        if self.choices.contains_key(&pair) {
            return Err(Error::DuplicatePair(pair.0));
        }
        self.choices.insert(pair, bit);
        Ok(())
    }

    pub fn get(&self, pair: &PairId) -> Option<bool> {
        self.choices.get(pair).copied()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairId, bool)> {
        self.choices.iter().map(|(k, v)| (k, *v))
    }

    /// All-canonical-first sequence over the given pairs.
    pub fn modal<'a>(pairs: impl IntoIterator<Item = &'a PairId>) -> Self {
        pairs.into_iter().map(|p| (p.clone(), true)).collect()
    }

    /// Bits ordered like `pairs`; errors if any pair is missing or the
    /// sequence carries extra pairs.
    pub fn bits_for<'a>(&self, pairs: impl IntoIterator<Item = &'a PairId>) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.choices.len());
        for p in pairs {
            match self.choices.get(p) {
                Some(b) => bits.push(*b),
                None => return Err(Error::Coverage(format!("missing pair `{p}`"))),
            }
        }
        if bits.len() != self.choices.len() {
            return Err(Error::Coverage(format!(
                "sequence has {} pairs, model has {}",
                self.choices.len(),
                bits.len()
            )));
        }
        Ok(bits)
    }
}

impl FromIterator<(PairId, bool)> for RankingSequence {
    fn from_iter<T: IntoIterator<Item = (PairId, bool)>>(iter: T) -> Self {
        RankingSequence { choices: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_flips_below_half() {
        let m = PairModel::from_raw("a".into(), 0.2, Provenance::RatioMle);
        assert!(m.flipped);
        assert!((m.theta - 0.8).abs() < 1e-15);
        let m = PairModel::from_raw("a".into(), 0.5, Provenance::RatioMle);
        assert!(!m.flipped);
    }

    #[test]
    fn duplicate_insert_rejected() {
        let mut s = RankingSequence::new();
        s.insert("p".into(), true).unwrap();
        assert!(matches!(s.insert("p".into(), false), Err(Error::DuplicatePair(_))));
    }

    #[test]
    fn coverage_checks_both_directions() {
        let s: RankingSequence = [("a".into(), true), ("b".into(), false)].into_iter().collect();
        let a = PairId::from("a");
        let b = PairId::from("b");
        let c = PairId::from("c");
        assert_eq!(s.bits_for([&b, &a]).unwrap(), vec![false, true]);
        assert!(s.bits_for([&a]).is_err());
        assert!(s.bits_for([&a, &b, &c]).is_err());
    }
}
