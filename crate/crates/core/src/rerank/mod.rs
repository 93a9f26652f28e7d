//! Second-stage re-ranking over the top candidates of a first-stage run.
//!
//! The re-ranking query may come from a different rewriting method than
//! the one that produced the candidates.

mod sidecar;

use std::fmt;
use std::str::FromStr;

pub use sidecar::{SidecarClient, SidecarRequest, SidecarResponse, DEFAULT_TIMEOUT};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::num::Score;
use crate::retrieval::{ql_score, RankedEntry, RankedList};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<S> {
    pub external_id: String,
    pub text: String,
    pub stage_one_score: S,
}

/// Candidates in stage-one order plus the query used to re-rank them.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<S> {
    pub turn_id: String,
    pub query_text: String,
    pub candidates: Vec<Candidate<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Lexical,
    External,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Lexical => "lexical",
            Engine::External => "external",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexical" => Ok(Engine::Lexical),
            "external" => Ok(Engine::External),
            other => Err(Error::Config(format!("unknown rerank engine {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RerankParams {
    pub depth: usize,
    pub engine: Engine,
}

impl Default for RerankParams {
    fn default() -> Self {
        RerankParams {
            depth: 200,
            engine: Engine::Lexical,
        }
    }
}

/// Takes the first `depth` entries of `run` and attaches their stored text.
pub fn make_candidates<S: Score>(
    run: &RankedList<S>,
    index: &Index,
    query_text: &str,
    depth: usize,
) -> Result<CandidateSet<S>> {
    if depth == 0 {
        return Err(Error::Config("rerank depth must be at least 1".into()));
    }
    if run.is_empty() {
        return Err(Error::Config(format!(
            "turn {} has no first-stage results",
            run.turn_id
        )));
    }
    let candidates = run
        .entries
        .iter()
        .take(depth)
        .map(|e| {
            let ord = index
                .ordinal(&e.external_id)
                .ok_or_else(|| Error::UnknownDoc(e.external_id.clone()))?;
            Ok(Candidate {
                external_id: e.external_id.clone(),
                text: index.doc(ord).text.clone(),
                stage_one_score: e.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet {
        turn_id: run.turn_id.clone(),
        query_text: query_text.to_string(),
        candidates,
    })
}

/// Orders candidates by score descending; equal scores keep stage-one order.
fn order_by_scores<S: Score>(cands: &CandidateSet<S>, scores: Vec<S>, tag: &str) -> RankedList<S> {
    let mut ranked: Vec<(usize, S)> = scores.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    RankedList {
        turn_id: cands.turn_id.clone(),
        entries: ranked
            .into_iter()
            .map(|(i, score)| RankedEntry {
                external_id: cands.candidates[i].external_id.clone(),
                score,
            })
            .collect(),
        method_tag: tag.to_string(),
    }
}

/// Re-scores candidates by query likelihood of the re-ranking query.
///
/// A query that analyzes to nothing known to the collection leaves the
/// stage-one order (and scores) untouched.
pub fn rerank_lexical<S: Score>(cands: &CandidateSet<S>, index: &Index, mu: S) -> Result<RankedList<S>> {
    let terms = index.analyze(&cands.query_text);
    let scores = cands
        .candidates
        .iter()
        .map(|c| {
            let ord = index
                .ordinal(&c.external_id)
                .ok_or_else(|| Error::UnknownDoc(c.external_id.clone()))?;
            ql_score(index, ord, &terms, mu)
        })
        .collect::<Result<Vec<S>>>();
    match scores {
        Ok(scores) => Ok(order_by_scores(cands, scores, "lexical")),
        Err(Error::EmptyQuery) => {
            log::info!("{}: re-ranking query is empty, keeping stage-one order", cands.turn_id);
            let stage_one = cands.candidates.iter().map(|c| c.stage_one_score).collect();
            Ok(order_by_scores(cands, stage_one, "lexical"))
        }
        Err(e) => Err(e),
    }
}

/// Re-ranks with scores from an external model process. Candidates the
/// sidecar leaves out get a score of negative infinity.
pub fn rerank_external<S: Score>(cands: &CandidateSet<S>, sidecar: &mut SidecarClient) -> Result<RankedList<S>> {
    let request = SidecarRequest::from_candidates(cands);
    let response = sidecar.score(&request)?;
    let scores = cands
        .candidates
        .iter()
        .map(|c| match response.score_of(&c.external_id) {
            Some(s) => S::from_f64_lossy(s),
            None => {
                log::warn!("{}: sidecar returned no score for {}", cands.turn_id, c.external_id);
                S::neg_infinity()
            }
        })
        .collect();
    Ok(order_by_scores(cands, scores, "external"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::fixture;
    use crate::retrieval::{search, RetrievalParams};

    fn run_for(idx: &Index, q: &[&str]) -> RankedList<f64> {
        let terms: Vec<String> = q.iter().map(|s| s.to_string()).collect();
        search(idx, &terms, &RetrievalParams { mu: 10.0, k: 10 })
            .unwrap()
            .with_turn("t")
    }

    #[test]
    fn depth_cutoff() {
        let idx = fixture();
        let run = run_for(&idx, &["sharks", "cats"]);
        assert_eq!(run.len(), 3);
        let c = make_candidates(&run, &idx, "q", 2).unwrap();
        assert_eq!(c.candidates.len(), 2);
        assert_eq!(c.candidates[0].external_id, run.entries[0].external_id);
        assert_eq!(
            c.candidates[0].text,
            idx.doc(idx.ordinal(&run.entries[0].external_id).unwrap()).text
        );
        assert_eq!(make_candidates(&run, &idx, "q", 200).unwrap().candidates.len(), 3);
    }

    #[test]
    fn unknown_doc_named() {
        let idx = fixture();
        let mut run = run_for(&idx, &["sharks"]);
        run.entries[1].external_id = "ghost".into();
        match make_candidates(&run, &idx, "q", 5) {
            Err(Error::UnknownDoc(id)) => assert_eq!(id, "ghost"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn same_query_keeps_order() {
        let idx = fixture();
        let run = run_for(&idx, &["sharks", "ocean"]);
        let c = make_candidates(&run, &idx, "sharks ocean", 10).unwrap();
        let r = rerank_lexical(&c, &idx, 10.0).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), run.ids().collect::<Vec<_>>());
    }

    #[test]
    fn different_query_reorders_by_ql() {
        let idx = fixture();
        let run = run_for(&idx, &["ocean"]);
        assert_eq!(run.ids().collect::<Vec<_>>(), vec!["d1", "d2"]);
        let c = make_candidates(&run, &idx, "sharks fish", 10).unwrap();
        let r = rerank_lexical(&c, &idx, 10.0).unwrap();
        // brute force: ln((tf + mu*cf/|C|)/(|d| + mu)) summed over {sharks, fish}
        let lp = |tf: f64, cf: f64, len: f64| ((tf + 10.0 * cf / 8.0) / (len + 10.0)).ln();
        let d1 = lp(2.0, 3.0, 3.0) + lp(0.0, 1.0, 3.0);
        let d2 = lp(1.0, 3.0, 3.0) + lp(1.0, 1.0, 3.0);
        assert!(d2 > d1);
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["d2", "d1"]);
        assert!((r.entries[0].score - d2).abs() < 1e-12);
    }

    #[test]
    fn empty_query_is_identity() {
        let idx = Index::build(
            [
                ("a".to_string(), "sharks swim".to_string()),
                ("b".to_string(), "sharks bite".to_string()),
            ],
            crate::textpipe::AnalyzerConfig::default(),
        )
        .unwrap();
        let run = RankedList::from_scored(
            "t",
            "ql",
            vec![
                RankedEntry {
                    external_id: "b".into(),
                    score: -1.0f64,
                },
                RankedEntry {
                    external_id: "a".into(),
                    score: -2.0,
                },
            ],
        );
        let c = make_candidates(&run, &idx, "What is it about?", 10).unwrap();
        let r = rerank_lexical(&c, &idx, 10.0).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["b", "a"]);
    }

    #[test]
    fn engine_names() {
        assert_eq!("lexical".parse::<Engine>().unwrap(), Engine::Lexical);
        assert_eq!("external".parse::<Engine>().unwrap().to_string(), "external");
        assert!("bert".parse::<Engine>().is_err());
    }
}
