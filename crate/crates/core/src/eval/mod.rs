//! TREC-style evaluation: MAP, MRR, nDCG@3, P@1, P@3 and recall@200.
//!
//! Binary metrics count a document as relevant when its grade is at least
//! `binarize_at`. nDCG uses the raw grade as a linear gain with a
//! `1 / log2(rank + 1)` discount and an ideal ranking over all judged
//! documents of the turn. Means are taken over turns that appear in the run
//! and have at least one relevant judgment.

mod report;
mod trec;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use report::{write_table, write_tsv};
pub use trec::{parse_qrels, parse_qrels_str, parse_run, parse_run_str, Judgments, Run};

use crate::error::{Error, Result};
use crate::num::Score;
use crate::retrieval::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Map,
    Mrr,
    Ndcg3,
    P1,
    P3,
    Recall200,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Map,
        Metric::Mrr,
        Metric::Ndcg3,
        Metric::P1,
        Metric::P3,
        Metric::Recall200,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Map => "map",
            Metric::Mrr => "mrr",
            Metric::Ndcg3 => "ndcg@3",
            Metric::P1 => "p@1",
            Metric::P3 => "p@3",
            Metric::Recall200 => "recall@200",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

/// Metric values for one turn (or their means).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TurnMetrics<S> {
    pub map: S,
    pub mrr: S,
    pub ndcg3: S,
    pub p1: S,
    pub p3: S,
    pub recall200: S,
}

impl<S: Score> TurnMetrics<S> {
    pub fn get(&self, metric: Metric) -> S {
        match metric {
            Metric::Map => self.map,
            Metric::Mrr => self.mrr,
            Metric::Ndcg3 => self.ndcg3,
            Metric::P1 => self.p1,
            Metric::P3 => self.p3,
            Metric::Recall200 => self.recall200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport<S> {
    pub per_turn: BTreeMap<String, TurnMetrics<S>>,
    pub mean: TurnMetrics<S>,
    /// Turns in the run that have no relevant judgment; excluded from means.
    pub unjudged: Vec<String>,
}

impl<S: Score> MetricReport<S> {
    pub fn evaluated(&self) -> usize {
        self.per_turn.len()
    }
}

fn precision_at<S: Score>(hits: &[bool], k: usize) -> S {
    let found = hits.iter().take(k).filter(|&&h| h).count();
    S::from_count(found as u64) / S::from_count(k as u64)
}

fn dcg<S: Score>(gains: impl Iterator<Item = u8>) -> S {
    gains
        .enumerate()
        .map(|(i, g)| S::from_count(g as u64) / S::from_count(i as u64 + 2).log2())
        .fold(S::zero(), |a, b| a + b)
}

/// Metrics of one ranked list against the judgments of its turn.
pub fn evaluate_turn<S: Score>(list: &RankedList<S>, judged: &BTreeMap<String, u8>, binarize_at: u8) -> TurnMetrics<S> {
    let relevant = judged.values().filter(|&&g| g >= binarize_at).count();
    let grade = |id: &str| judged.get(id).copied().unwrap_or(0);
    let hits: Vec<bool> = list
        .ids()
        .map(|id| grade(id) >= binarize_at && judged.contains_key(id))
        .collect();

    let mut found = 0u64;
    let mut precision_sum = S::zero();
    let mut first_hit = None;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            found += 1;
            precision_sum += S::from_count(found) / S::from_count(i as u64 + 1);
            first_hit.get_or_insert(i + 1);
        }
    }
    let total = S::from_count(relevant.max(1) as u64);

    let mut ideal: Vec<u8> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: S = dcg(ideal.into_iter().take(3));
    let actual: S = dcg(list.ids().take(3).map(grade));

    TurnMetrics {
        map: precision_sum / total,
        mrr: first_hit.map_or(S::zero(), |r| S::one() / S::from_count(r as u64)),
        ndcg3: if idcg > S::zero() { actual / idcg } else { S::zero() },
        p1: precision_at(&hits, 1),
        p3: precision_at(&hits, 3),
        recall200: S::from_count(hits.iter().take(200).filter(|&&h| h).count() as u64) / total,
    }
}

/// Evaluates every turn of `run` that has at least one relevant judgment.
pub fn compute<S: Score>(run: &Run<S>, judgments: &Judgments, binarize_at: u8) -> Result<MetricReport<S>> {
    if !(1..=2).contains(&binarize_at) {
        return Err(Error::Config(format!(
            "binarization threshold must be 1 or 2, got {binarize_at}"
        )));
    }
    let mut per_turn = BTreeMap::new();
    let mut unjudged = Vec::new();
    for (turn, list) in run {
        match judgments.turn(turn) {
            Some(judged) if judged.values().any(|&g| g >= binarize_at) => {
                per_turn.insert(turn.clone(), evaluate_turn(list, judged, binarize_at));
            }
            _ => unjudged.push(turn.clone()),
        }
    }
    if per_turn.is_empty() {
        return Err(Error::NoSharedTurns);
    }
    if !unjudged.is_empty() {
        log::info!(
            "{} run turns have no relevant judgments and are not averaged",
            unjudged.len()
        );
    }
    let n = S::from_count(per_turn.len() as u64);
    let mean_of = |m: Metric| {
        per_turn
            .values()
            .map(|t: &TurnMetrics<S>| t.get(m))
            .fold(S::zero(), |a, b| a + b)
            / n
    };
    let mean = TurnMetrics {
        map: mean_of(Metric::Map),
        mrr: mean_of(Metric::Mrr),
        ndcg3: mean_of(Metric::Ndcg3),
        p1: mean_of(Metric::P1),
        p3: mean_of(Metric::P3),
        recall200: mean_of(Metric::Recall200),
    };
    Ok(MetricReport {
        per_turn,
        mean,
        unjudged,
    })
}
