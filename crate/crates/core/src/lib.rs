//! Conversational passage search: utterance rewriting, Dirichlet query
//! likelihood with RM3 feedback, candidate re-ranking and TREC-style
//! evaluation.
//!
//! Scoring code is generic over the float type (see [`num::Score`]);
//! the aliases below fix it to `f64`, which is what the command-line
//! tool uses.

pub mod error;
pub mod eval;
pub mod index;
pub mod num;
pub mod pipeline;
pub mod rerank;
pub mod retrieval;
pub mod rewriting;
pub mod textpipe;

pub use error::{Error, Result};
pub use index::Index;
pub use num::Score;
pub use rewriting::{Conversation, Method, Rewriter};
pub use textpipe::{Analyzer, AnalyzerConfig};

pub type RankedList = retrieval::RankedList<f64>;
pub type RankedEntry = retrieval::RankedEntry<f64>;
pub type RetrievalParams = retrieval::RetrievalParams<f64>;
pub type PrfParams = retrieval::PrfParams<f64>;
pub type QueryModel = retrieval::QueryModel<f64>;
pub type CandidateSet = rerank::CandidateSet<f64>;
pub type MetricReport = eval::MetricReport<f64>;
pub type Run = eval::Run<f64>;
pub type PipelineOutput = pipeline::PipelineOutput<f64>;
