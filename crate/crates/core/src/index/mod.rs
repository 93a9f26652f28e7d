//! Immutable inverted index with the collection statistics needed for
//! Dirichlet-smoothed query likelihood and relevance-model feedback.

mod corpus;
mod store;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

pub use corpus::{read_corpus, read_jsonl_corpus, read_tsv_corpus, CorpusFormat};
pub use store::FORMAT_VERSION;

use crate::error::{Error, Result};
use crate::textpipe::{Analyzer, AnalyzerConfig};

/// Dense document ordinal, assigned in corpus input order.
pub type DocOrdinal = u32;
pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocOrdinal,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocRecord {
    pub external_id: String,
    pub text: String,
}

/// Collection-level counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexStats {
    pub doc_count: u32,
    /// |C|, the sum of all document lengths.
    pub total_terms: u64,
    pub vocabulary_size: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TermEntry {
    pub term: String,
    pub cf: u64,
    pub df: u32,
}

#[derive(Debug, Clone)]
pub struct Index {
    analyzer: Analyzer,
    terms: Vec<TermEntry>,
    term_ids: HashMap<String, TermId>,
    postings: Vec<Vec<Posting>>,
    doc_lengths: Vec<u32>,
    docs: Vec<DocRecord>,
    doc_ids: HashMap<String, DocOrdinal>,
    // per-document (term, tf) lists, derived from the postings
    forward: Vec<Vec<(TermId, u32)>>,
    total_terms: u64,
}

impl Index {
    /// Indexes `(external_id, text)` pairs. Ordinals follow input order.
    pub fn build<I>(corpus: I, cfg: AnalyzerConfig) -> Result<Index>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        cfg.validate()?;
        let docs: Vec<DocRecord> = corpus
            .into_iter()
            .map(|(external_id, text)| DocRecord { external_id, text })
            .collect();
        let mut doc_ids = HashMap::with_capacity(docs.len());
        for (ord, d) in docs.iter().enumerate() {
            if doc_ids.insert(d.external_id.clone(), ord as DocOrdinal).is_some() {
                return Err(Error::DuplicateDocId(d.external_id.clone()));
            }
        }

        let analyzer = Analyzer::new(cfg);
        let analyzed: Vec<Vec<String>> = docs.par_iter().map(|d| analyzer.analyze(&d.text)).collect();

        let mut inverted: BTreeMap<&str, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (ord, terms) in analyzed.iter().enumerate() {
            doc_lengths.push(terms.len() as u32);
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in terms {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            for (t, tf) in counts {
                inverted.entry(t).or_default().push(Posting {
                    doc: ord as DocOrdinal,
                    tf,
                });
            }
        }
        if inverted.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut terms = Vec::with_capacity(inverted.len());
        let mut postings = Vec::with_capacity(inverted.len());
        for (term, plist) in inverted {
            terms.push(TermEntry {
                term: term.to_string(),
                cf: plist.iter().map(|p| p.tf as u64).sum(),
                df: plist.len() as u32,
            });
            postings.push(plist);
        }
        Ok(Index::assemble(analyzer, terms, postings, doc_lengths, docs))
    }

    pub(crate) fn assemble(
        analyzer: Analyzer,
        terms: Vec<TermEntry>,
        postings: Vec<Vec<Posting>>,
        doc_lengths: Vec<u32>,
        docs: Vec<DocRecord>,
    ) -> Index {
        let term_ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.term.clone(), i as TermId))
            .collect();
        let doc_ids = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.external_id.clone(), i as DocOrdinal))
            .collect();
        let mut forward = vec![Vec::new(); docs.len()];
        for (tid, plist) in postings.iter().enumerate() {
            for p in plist {
                forward[p.doc as usize].push((tid as TermId, p.tf));
            }
        }
        let total_terms = doc_lengths.iter().map(|&l| l as u64).sum();
        Index {
            analyzer,
            terms,
            term_ids,
            postings,
            doc_lengths,
            docs,
            doc_ids,
            forward,
            total_terms,
        }
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            doc_count: self.docs.len() as u32,
            total_terms: self.total_terms,
            vocabulary_size: self.terms.len() as u32,
        }
    }

    pub fn doc_count(&self) -> u32 {
        self.docs.len() as u32
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    /// Rejects a query-time analyzer that differs from the build-time one.
    pub fn ensure_analyzer(&self, cfg: &AnalyzerConfig) -> Result<()> {
        if cfg == self.analyzer.config() {
            Ok(())
        } else {
            Err(Error::AnalyzerMismatch)
        }
    }

    /// Analyzes free text with the index's own analyzer.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        self.analyzer.analyze(text)
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize].term
    }

    /// Collection frequency cf(w); zero for unknown terms.
    pub fn collection_tf(&self, term: &str) -> u64 {
        self.term_id(term).map_or(0, |id| self.terms[id as usize].cf)
    }

    pub(crate) fn collection_tf_by_id(&self, id: TermId) -> u64 {
        self.terms[id as usize].cf
    }

    /// Document frequency df(w); zero for unknown terms.
    pub fn doc_freq(&self, term: &str) -> u32 {
        self.term_id(term).map_or(0, |id| self.terms[id as usize].df)
    }

    /// Postings for a normalized term, sorted by ordinal. Empty when unknown.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_id(term).map_or(&[][..], |id| &self.postings[id as usize])
    }

    pub(crate) fn postings_by_id(&self, id: TermId) -> &[Posting] {
        &self.postings[id as usize]
    }

    /// Term frequency of `term` in `doc`, by binary search over the postings.
    pub fn term_frequency(&self, doc: DocOrdinal, term: &str) -> u32 {
        self.term_id(term).map_or(0, |id| self.tf_by_id(doc, id))
    }

    pub(crate) fn tf_by_id(&self, doc: DocOrdinal, id: TermId) -> u32 {
        let plist = &self.postings[id as usize];
        plist.binary_search_by_key(&doc, |p| p.doc).map_or(0, |i| plist[i].tf)
    }

    pub fn doc_length(&self, doc: DocOrdinal) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn doc(&self, doc: DocOrdinal) -> &DocRecord {
        &self.docs[doc as usize]
    }

    pub fn docs(&self) -> &[DocRecord] {
        &self.docs
    }

    pub fn ordinal(&self, external_id: &str) -> Option<DocOrdinal> {
        self.doc_ids.get(external_id).copied()
    }

    /// (term, tf) pairs of one document, in term-id order.
    pub(crate) fn doc_terms(&self, doc: DocOrdinal) -> &[(TermId, u32)] {
        &self.forward[doc as usize]
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|t| t.term.as_str())
    }

    pub(crate) fn term_entries(&self) -> &[TermEntry] {
        &self.terms
    }

    pub(crate) fn all_postings(&self) -> &[Vec<Posting>] {
        &self.postings
    }

    pub(crate) fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }
}
