//! First-stage ranking: Dirichlet-smoothed query likelihood and RM3
//! pseudo-relevance feedback with KL (cross-entropy) re-scoring.

mod rm3;
mod run;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use rm3::{kl_search, rm3_expand, QueryModel};
pub use run::{write_run, write_runs};

use crate::error::{Error, Result};
use crate::index::{DocOrdinal, Index, TermId};
use crate::num::{stable_sum, Score};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalParams<S> {
    /// Dirichlet prior.
    pub mu: S,
    /// Result depth.
    pub k: usize,
}

impl<S: Score> Default for RetrievalParams<S> {
    fn default() -> Self {
        RetrievalParams {
            mu: S::from_f64_lossy(2500.0),
            k: 1000,
        }
    }
}

impl<S: Score> RetrievalParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.mu <= S::zero() || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrfParams<S> {
    pub fb_docs: usize,
    pub fb_terms: usize,
    /// Weight of the original query model in the mixture.
    pub gamma: S,
}

impl<S: Score> Default for PrfParams<S> {
    fn default() -> Self {
        PrfParams {
            fb_docs: 20,
            fb_terms: 20,
            gamma: S::from_f64_lossy(0.5),
        }
    }
}

impl<S: Score> PrfParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs == 0 || self.fb_terms == 0 {
            return Err(Error::Config("fb_docs and fb_terms must be at least 1".into()));
        }
        if !(self.gamma >= S::zero() && self.gamma <= S::one()) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry<S> {
    pub external_id: String,
    pub score: S,
}

/// Ranked results for one turn.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList<S> {
    pub turn_id: String,
    pub entries: Vec<RankedEntry<S>>,
    pub method_tag: String,
}

impl<S: Score> RankedList<S> {
    pub fn new(turn_id: impl Into<String>, method_tag: impl Into<String>) -> Self {
        RankedList {
            turn_id: turn_id.into(),
            entries: Vec::new(),
            method_tag: method_tag.into(),
        }
    }

    /// Sorts by score descending, ties by external id ascending.
    pub fn from_scored(
        turn_id: impl Into<String>,
        method_tag: impl Into<String>,
        mut entries: Vec<RankedEntry<S>>,
    ) -> Self {
        entries.sort_by(cmp_entries);
        RankedList {
            turn_id: turn_id.into(),
            entries,
            method_tag: method_tag.into(),
        }
    }

    pub fn with_turn(mut self, turn_id: impl Into<String>) -> Self {
        self.turn_id = turn_id.into();
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.method_tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.external_id.as_str())
    }
}

pub(crate) fn cmp_entries<S: Score>(a: &RankedEntry<S>, b: &RankedEntry<S>) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.external_id.cmp(&b.external_id))
}

/// Query terms resolved against the vocabulary; unknown terms are dropped.
pub(crate) fn resolve_terms(index: &Index, query_terms: &[String]) -> Result<Vec<TermId>> {
    let mut resolved = Vec::with_capacity(query_terms.len());
    for t in query_terms {
        match index.term_id(t) {
            Some(id) => resolved.push(id),
            None => log::debug!("dropping query term {t:?}: not in collection"),
        }
    }
    if resolved.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(resolved)
}

/// log p(w|d) under Dirichlet smoothing.
#[inline]
pub(crate) fn dirichlet_log_prob<S: Score>(index: &Index, doc: DocOrdinal, term: TermId, mu: S) -> S {
    let tf = S::from_count(index.tf_by_id(doc, term) as u64);
    let cf = S::from_count(index.collection_tf_by_id(term));
    let total = S::from_count(index.total_terms());
    let len = S::from_count(index.doc_length(doc) as u64);
    ((tf + mu * cf / total) / (len + mu)).ln()
}

fn ql_resolved<S: Score>(index: &Index, doc: DocOrdinal, terms: &[TermId], mu: S) -> S {
    stable_sum(terms.iter().map(|&t| dirichlet_log_prob(index, doc, t, mu)).collect())
}

/// Query-likelihood score of one document: the sum over query positions of
/// `ln((tf(w,d) + mu * cf(w)/|C|) / (|d| + mu))`.
///
/// Repeated query terms count once per occurrence. Terms absent from the
/// collection are dropped; if none remain the query is empty.
pub fn ql_score<S: Score>(index: &Index, doc: DocOrdinal, query_terms: &[String], mu: S) -> Result<S> {
    let terms = resolve_terms(index, query_terms)?;
    Ok(ql_resolved(index, doc, &terms, mu))
}

/// Documents containing at least one of `terms`, ascending.
pub(crate) fn matching_docs(index: &Index, terms: impl IntoIterator<Item = TermId>) -> Vec<DocOrdinal> {
    let mut docs: Vec<DocOrdinal> = terms
        .into_iter()
        .flat_map(|t| index.postings_by_id(t).iter().map(|p| p.doc))
        .collect();
    docs.sort_unstable();
    docs.dedup();
    docs
}

pub(crate) fn top_k<S: Score>(index: &Index, scored: Vec<(DocOrdinal, S)>, k: usize) -> Vec<RankedEntry<S>> {
    let mut entries: Vec<RankedEntry<S>> = scored
        .into_iter()
        .map(|(d, score)| RankedEntry {
            external_id: index.doc(d).external_id.clone(),
            score,
        })
        .collect();
    entries.sort_by(cmp_entries);
    entries.truncate(k);
    entries
}

/// Top-k documents by [`ql_score`] among those matching at least one query
/// term.
pub fn search<S: Score>(index: &Index, query_terms: &[String], params: &RetrievalParams<S>) -> Result<RankedList<S>> {
    params.validate()?;
    let terms = resolve_terms(index, query_terms)?;
    let docs = matching_docs(index, terms.iter().copied());
    let scored: Vec<(DocOrdinal, S)> = docs
        .par_iter()
        .map(|&d| (d, ql_resolved(index, d, &terms, params.mu)))
        .collect();
    Ok(RankedList {
        turn_id: String::new(),
        entries: top_k(index, scored, params.k),
        method_tag: "ql".into(),
    })
}

/// Analyzes `text` with the index analyzer, runs query likelihood and,
/// when `prf` is given, a second RM3 pass.
pub fn retrieve<S: Score>(
    index: &Index,
    text: &str,
    params: &RetrievalParams<S>,
    prf: Option<&PrfParams<S>>,
) -> Result<RankedList<S>> {
    let terms = index.analyze(text);
    match prf {
        None => search(index, &terms, params),
        Some(prf) => {
            prf.validate()?;
            let first = search(
                index,
                &terms,
                &RetrievalParams {
                    mu: params.mu,
                    k: prf.fb_docs,
                },
            )?;
            let model = rm3_expand(index, &terms, &first, prf, params.mu)?;
            kl_search(index, &model, params)
        }
    }
}

/// Term counts of a query, keyed by term text.
pub(crate) fn query_counts<'a>(index: &'a Index, terms: &[TermId]) -> BTreeMap<&'a str, u64> {
    let mut counts = BTreeMap::new();
    for &t in terms {
        *counts.entry(index.term(t)).or_default() += 1;
    }
    counts
}
