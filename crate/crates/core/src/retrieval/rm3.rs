use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    dirichlet_log_prob, matching_docs, ql_resolved, query_counts, resolve_terms, top_k, PrfParams, RankedList,
    RetrievalParams,
};
use crate::error::{Error, Result};
use crate::index::{DocOrdinal, Index, TermId};
use crate::num::{stable_sum, Score};

/// A normalized term distribution used as a query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryModel<S> {
    weights: BTreeMap<String, S>,
}

impl<S: Score> QueryModel<S> {
    /// Normalizes `weights` to sum to one, dropping non-positive entries.
    pub fn from_weights(weights: impl IntoIterator<Item = (String, S)>) -> Result<Self> {
        let weights: BTreeMap<String, S> = weights.into_iter().filter(|(_, w)| *w > S::zero()).collect();
        let total: S = weights.values().copied().sum();
        if weights.is_empty() || !total.is_finite() {
            return Err(Error::EmptyQuery);
        }
        Ok(QueryModel {
            weights: weights.into_iter().map(|(t, w)| (t, w / total)).collect(),
        })
    }

    /// Maximum-likelihood model of a term multiset.
    pub fn from_terms(terms: &[String]) -> Result<Self> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for t in terms {
            *counts.entry(t.clone()).or_default() += 1;
        }
        let n = S::from_count(terms.len() as u64);
        Self::from_weights(counts.into_iter().map(|(t, c)| (t, S::from_count(c) / n)))
    }

    pub fn weight(&self, term: &str) -> S {
        self.weights.get(term).copied().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, S)> {
        self.weights.iter().map(|(t, &w)| (t.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// RM3 expansion: mixes the query's MLE model with a relevance model (RM1)
/// estimated from the top `fb_docs` documents of `first_pass`.
///
/// Feedback documents are weighted by their exponentiated query-likelihood
/// scores, normalized over the feedback set; document models are unsmoothed
/// MLE. RM1 is cut to its `fb_terms` heaviest terms and renormalized before
/// mixing with weight `gamma` on the original query.
pub fn rm3_expand<S: Score>(
    index: &Index,
    query_terms: &[String],
    first_pass: &RankedList<S>,
    prf: &PrfParams<S>,
    mu: S,
) -> Result<QueryModel<S>> {
    prf.validate()?;
    let resolved = resolve_terms(index, query_terms)?;
    if first_pass.is_empty() {
        return Err(Error::Config("relevance feedback needs a non-empty first pass".into()));
    }

    let feedback: Vec<DocOrdinal> = first_pass
        .entries
        .iter()
        .take(prf.fb_docs)
        .map(|e| {
            index
                .ordinal(&e.external_id)
                .ok_or_else(|| Error::UnknownDoc(e.external_id.clone()))
        })
        .collect::<Result<_>>()?;

    let log_scores: Vec<S> = feedback.iter().map(|&d| ql_resolved(index, d, &resolved, mu)).collect();
    let max = log_scores.iter().copied().fold(S::neg_infinity(), S::max);
    let unnorm: Vec<S> = log_scores.iter().map(|&s| (s - max).exp()).collect();
    let z: S = unnorm.iter().copied().sum();

    let mut rm1: BTreeMap<TermId, Vec<S>> = BTreeMap::new();
    for (&doc, &u) in feedback.iter().zip(&unnorm) {
        let len = index.doc_length(doc);
        if len == 0 {
            continue;
        }
        let doc_weight = u / z;
        let len = S::from_count(len as u64);
        for &(term, tf) in index.doc_terms(doc) {
            rm1.entry(term)
                .or_default()
                .push(doc_weight * S::from_count(tf as u64) / len);
        }
    }
    let mut rm1: Vec<(TermId, S)> = rm1.into_iter().map(|(t, parts)| (t, stable_sum(parts))).collect();
    rm1.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| index.term(a.0).cmp(index.term(b.0)))
    });
    rm1.truncate(prf.fb_terms);
    let rm1_total: S = rm1.iter().map(|&(_, w)| w).sum();

    let counts = query_counts(index, &resolved);
    let qlen = S::from_count(resolved.len() as u64);
    let mut mixed: BTreeMap<String, S> = counts
        .iter()
        .map(|(&t, &c)| (t.to_string(), prf.gamma * S::from_count(c) / qlen))
        .collect();
    for (term, w) in rm1 {
        let slot = mixed.entry(index.term(term).to_string()).or_insert_with(S::zero);
        *slot += (S::one() - prf.gamma) * w / rm1_total;
    }
    QueryModel::from_weights(mixed)
}

/// Ranks documents matching any model term by `sum_w p(w) * log p(w|d)`
/// with Dirichlet-smoothed document models.
pub fn kl_search<S: Score>(index: &Index, model: &QueryModel<S>, params: &RetrievalParams<S>) -> Result<RankedList<S>> {
    params.validate()?;
    let terms: Vec<(TermId, S)> = model
        .terms()
        .filter_map(|(t, w)| index.term_id(t).map(|id| (id, w)))
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let docs = matching_docs(index, terms.iter().map(|&(t, _)| t));
    let scored: Vec<(DocOrdinal, S)> = docs
        .par_iter()
        .map(|&d| {
            let parts = terms
                .iter()
                .map(|&(t, w)| w * dirichlet_log_prob(index, d, t, params.mu))
                .collect();
            (d, stable_sum(parts))
        })
        .collect();
    Ok(RankedList {
        turn_id: String::new(),
        entries: top_k(index, scored, params.k),
        method_tag: "rm3".into(),
    })
}
