//! Annotation, prediction and target files.
//!
//! All three are UTF-8 CSV with a mandatory header:
//!
//! ```text
//! pair_id,annotator_id,choice,confidence   choice: first|second|undecided, confidence: 0|1|2 or empty
//! pair_id,choice                           choice: first|second, in the original orientation
//! pair_id,theta,flipped                    theta with 6 decimals, flipped: true|false
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{PairCounts, ScoreCounts};
use crate::model::{PairId, PairModel, Provenance, RankingSequence};

pub const ANNOTATIONS_HEADER: &str = "pair_id,annotator_id,choice,confidence";
pub const PREDICTIONS_HEADER: &str = "pair_id,choice";
pub const TARGETS_HEADER: &str = "pair_id,theta,flipped";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    First,
    Second,
    Undecided,
}

impl Choice {
    fn as_str(self) -> &'static str {
        match self {
            Choice::First => "first",
            Choice::Second => "second",
            Choice::Undecided => "undecided",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Choice {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "first" => Ok(Choice::First),
            "second" => Ok(Choice::Second),
            "undecided" => Ok(Choice::Undecided),
            _ => Err(()),
        }
    }
}

/// One annotator's vote on one pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: PairId,
    pub annotator_id: String,
    pub choice: Choice,
    /// 0 = not, 1 = somewhat, 2 = very confident. Never set on undecided votes.
    pub confidence: Option<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Train,
    Test,
}

/// Pairs with at least `max_undecided` undecided votes are discarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub max_undecided: u32,
    pub mode: SplitMode,
}

impl FilterPolicy {
    pub fn train() -> Self {
        FilterPolicy { max_undecided: 3, mode: SplitMode::Train }
    }

    pub fn test() -> Self {
        FilterPolicy { max_undecided: 1, mode: SplitMode::Test }
    }

    pub fn for_mode(mode: SplitMode) -> Self {
        match mode {
            SplitMode::Train => Self::train(),
            SplitMode::Test => Self::test(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<PairCounts>,
    pub dropped: Vec<PairId>,
}

fn reader<R: Read>(source: R, expected: &'static str) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?;
    let found = headers.iter().collect::<Vec<_>>().join(",");
    // an empty file has no header at all and parses to nothing
    if found.is_empty() && headers.is_empty() {
        return Ok(rdr);
    }
    if found != expected {
        return Err(Error::Header { expected, found });
    }
    Ok(rdr)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str> {
    match rec.get(i) {
        Some(v) if !v.is_empty() || name == "confidence" => Ok(v),
        _ => Err(Error::Parse { line: line_of(rec), message: format!("missing {name}") }),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

pub fn parse_annotations<R: Read>(source: R) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = reader(source, ANNOTATIONS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec);
        let pair_id = PairId::new(field(&rec, 0, "pair_id")?);
        let annotator_id = field(&rec, 1, "annotator_id")?.to_owned();
        let raw_choice = field(&rec, 2, "choice")?;
        let choice = raw_choice.parse::<Choice>().map_err(|_| Error::Range {
            line,
            value: raw_choice.to_owned(),
            expected: "first, second or undecided",
        })?;
        let raw_conf = field(&rec, 3, "confidence")?;
        let confidence = match raw_conf {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            "2" => Some(2),
            other => {
                return Err(Error::Range { line, value: other.to_owned(), expected: "0, 1, 2 or empty" });
            }
        };
        if confidence.is_some() && choice == Choice::Undecided {
            return Err(Error::Parse { line, message: "confidence given for an undecided vote".into() });
        }
        out.push(AnnotationRecord { pair_id, annotator_id, choice, confidence });
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(records: &[AnnotationRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ANNOTATIONS_HEADER.split(','))?;
    for r in records {
        let conf = r.confidence.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([r.pair_id.as_str(), &r.annotator_id, r.choice.as_str(), &conf])?;
    }
    w.flush()?;
    Ok(())
}

/// Tallies votes per pair, dropping pairs with too many undecided votes or
/// with no decided vote at all. Pairs keep their first-appearance order.
pub fn filter_pairs(records: &[AnnotationRecord], policy: &FilterPolicy) -> FilterOutcome {
    #[derive(Default)]
    struct Tally {
        n: u32,
        n_first: u32,
        undecided: u32,
        scores: [u32; 3],
    }

    let mut order: Vec<&PairId> = Vec::new();
    let mut tallies: HashMap<&PairId, Tally> = HashMap::new();
    for r in records {
        let t = tallies.entry(&r.pair_id).or_insert_with(|| {
            order.push(&r.pair_id);
            Tally::default()
        });
        match r.choice {
            Choice::Undecided => {
                t.undecided += 1;
                continue;
            }
            Choice::First => t.n_first += 1,
            Choice::Second => {}
        }
        t.n += 1;
        if let Some(c) = r.confidence {
            t.scores[c as usize] += 1;
        }
    }

    let mut outcome = FilterOutcome::default();
    for id in order {
        let t = &tallies[id];
        if t.undecided >= policy.max_undecided || t.n == 0 {
            outcome.dropped.push(id.clone());
            continue;
        }
        let scored = t.scores.iter().sum::<u32>() > 0;
        outcome.kept.push(PairCounts {
            pair_id: id.clone(),
            n: t.n,
            n_first: t.n_first,
            score_counts: scored.then_some(ScoreCounts(t.scores)),
        });
    }
    outcome
}

pub fn detect_unanimous(counts: &PairCounts) -> bool {
    counts.is_unanimous()
}

/// Writes one `pair_id,theta,flipped` line per model and returns the count.
pub fn export_targets<W: Write>(models: &[PairModel], sink: W) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no models to export".into()));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TARGETS_HEADER.split(','))?;
    for m in models {
        w.write_record([m.pair_id.as_str(), &format!("{:.6}", m.theta), if m.flipped { "true" } else { "false" }])?;
    }
    w.flush()?;
    Ok(models.len())
}

/// Reads a targets file. The estimator is not recorded there, so every model
/// comes back as [`Provenance::External`].
pub fn parse_targets<R: Read>(source: R) -> Result<Vec<PairModel>> {
    let mut rdr = reader(source, TARGETS_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec);
        let pair_id = PairId::new(field(&rec, 0, "pair_id")?);
        let raw_theta = field(&rec, 1, "theta")?;
        let theta: f64 = raw_theta
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad theta `{raw_theta}`") })?;
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::Range { line, value: raw_theta.to_owned(), expected: "theta in [0.5, 1]" });
        }
        let flipped = match field(&rec, 2, "flipped")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::Range { line, value: other.to_owned(), expected: "true or false" }),
        };
        if !seen.insert(pair_id.clone()) {
            return Err(Error::DuplicatePair(pair_id.0));
        }
        out.push(PairModel { pair_id, theta, flipped, provenance: Provenance::External });
    }
    Ok(out)
}

/// Reads predictions given in file orientation and re-expresses them in each
/// model's canonical orientation.
pub fn parse_predictions<R: Read>(source: R, models: &[PairModel]) -> Result<RankingSequence> {
    let flipped: HashMap<&PairId, bool> = models.iter().map(|m| (&m.pair_id, m.flipped)).collect();
    let mut rdr = reader(source, PREDICTIONS_HEADER)?;
    let mut seq = RankingSequence::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec);
        let pair_id = PairId::new(field(&rec, 0, "pair_id")?);
        let raw = field(&rec, 1, "choice")?;
        let first = match raw.parse::<Choice>() {
            Ok(Choice::First) => true,
            Ok(Choice::Second) => false,
            _ => return Err(Error::Range { line, value: raw.to_owned(), expected: "first or second" }),
        };
        let Some(&f) = flipped.get(&pair_id) else {
            return Err(Error::Coverage(format!("line {line}: pair `{pair_id}` is not in the model")));
        };
        seq.insert(pair_id, first != f)?;
    }
    if seq.len() != models.len() {
        let missing: Vec<&str> =
            models.iter().filter(|m| seq.get(&m.pair_id).is_none()).map(|m| m.pair_id.as_str()).take(5).collect();
        return Err(Error::Coverage(format!(
            "{} of {} pairs have no prediction (e.g. {})",
            models.len() - seq.len(),
            models.len(),
            missing.join(", ")
        )));
    }
    Ok(seq)
}

/// Writes a canonical sequence back in file orientation, in model order.
pub fn write_predictions<W: Write>(seq: &RankingSequence, models: &[PairModel], sink: W) -> Result<()> {
    let bits = seq.bits_for(models.iter().map(|m| &m.pair_id))?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PREDICTIONS_HEADER.split(','))?;
    for (m, bit) in models.iter().zip(bits) {
        let choice = if bit != m.flipped { Choice::First } else { Choice::Second };
        w.write_record([m.pair_id.as_str(), choice.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
