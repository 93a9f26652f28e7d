//! TREC qrels and run file parsing.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Score;
use crate::retrieval::{RankedEntry, RankedList};

/// Graded judgments: turn id -> doc id -> grade in {0, 1, 2}.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    turns: BTreeMap<String, BTreeMap<String, u8>>,
}

impl Judgments {
    pub fn insert(&mut self, turn: &str, doc: &str, grade: u8) -> bool {
        self.turns
            .entry(turn.to_string())
            .or_default()
            .insert(doc.to_string(), grade)
            .is_none()
    }

    pub fn grade(&self, turn: &str, doc: &str) -> Option<u8> {
        self.turns.get(turn)?.get(doc).copied()
    }

    pub fn turn(&self, turn: &str) -> Option<&BTreeMap<String, u8>> {
        self.turns.get(turn)
    }

    pub fn turns(&self) -> impl Iterator<Item = &str> {
        self.turns.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.turns.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-turn ranked lists keyed by turn id.
pub type Run<S> = BTreeMap<String, RankedList<S>>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_qrels(path: &Path) -> Result<Judgments> {
    parse_qrels_str(&read(path)?, path)
}

/// `turn_id 0 docid grade` per line. `origin` is only used in errors.
pub fn parse_qrels_str(text: &str, origin: &Path) -> Result<Judgments> {
    let mut j = Judgments::default();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::parse(origin, i + 1, msg);
        let [turn, _iter, doc, grade] = fields[..] else {
            return Err(err("expected 4 fields: turn_id 0 docid grade"));
        };
        let grade: u8 = grade
            .parse()
            .ok()
            .filter(|g| *g <= 2)
            .ok_or_else(|| err("grade must be 0, 1 or 2"))?;
        if !j.insert(turn, doc, grade) {
            return Err(err("duplicate (turn, doc) judgment"));
        }
    }
    Ok(j)
}

pub fn parse_run<S: Score>(path: &Path) -> Result<Run<S>> {
    parse_run_str(&read(path)?, path)
}

/// `turn_id Q0 docid rank score tag` per line. Entries are re-sorted by
/// score descending, then doc id ascending; the stated rank is ignored.
pub fn parse_run_str<S: Score>(text: &str, origin: &Path) -> Result<Run<S>> {
    let mut run: Run<S> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::parse(origin, i + 1, msg);
        let [turn, _q0, doc, rank, score, tag] = fields[..] else {
            return Err(err("expected 6 fields: turn_id Q0 docid rank score tag"));
        };
        rank.parse::<i64>().map_err(|_| err("rank is not an integer"))?;
        let score: f64 = score.parse().map_err(|_| err("score is not a number"))?;
        if score.is_nan() {
            return Err(err("score is NaN"));
        }
        if !seen.insert((turn.to_string(), doc.to_string())) {
            return Err(err("document listed twice for the same turn"));
        }
        run.entry(turn.to_string())
            .or_insert_with(|| RankedList::new(turn, tag))
            .entries
            .push(RankedEntry {
                external_id: doc.to_string(),
                score: S::from_f64_lossy(score),
            });
    }
    for list in run.values_mut() {
        list.entries.sort_by(crate::retrieval::cmp_entries);
    }
    Ok(run)
}
