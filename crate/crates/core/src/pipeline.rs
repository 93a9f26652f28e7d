//! End-to-end wiring: rewrite, retrieve, re-rank, evaluate.
//!
//! The per-stage functions here are shared by the command-line
//! subcommands, so running the pipeline and chaining the subcommands
//! by hand produce the same files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::{compute, parse_qrels, parse_run, write_tsv, Metric, MetricReport, Run};
use crate::index::Index;
use crate::num::Score;
use crate::rerank::{make_candidates, rerank_external, rerank_lexical, Engine, RerankParams, SidecarClient};
use crate::retrieval::{retrieve, write_runs, PrfParams, RankedList, RetrievalParams};
use crate::rewriting::{
    attach_manual, load_annotations, load_conversations, write_rewrites, Conversation, CueLexicon, Method, Rewriter,
};
use crate::textpipe::Analyzer;

pub const STAGE1_REWRITES: &str = "rewrites.stage1.tsv";
pub const RERANK_REWRITES: &str = "rewrites.rerank.tsv";
pub const STAGE1_RUN: &str = "stage1.run";
pub const RERANK_RUN: &str = "rerank.run";
pub const STAGE1_EVAL: &str = "eval.stage1.tsv";
pub const RERANK_EVAL: &str = "eval.rerank.tsv";

/// Pipeline settings as they appear in a TOML file or on the command
/// line. Every field is optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub index: Option<PathBuf>,
    pub conversations: Option<PathBuf>,
    pub manual: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub cues: Option<PathBuf>,
    pub stage1_method: Option<String>,
    pub rerank_method: Option<String>,
    pub mu: Option<f64>,
    pub k: Option<usize>,
    pub prf: Option<bool>,
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub gamma: Option<f64>,
    pub depth: Option<usize>,
    pub engine: Option<String>,
    pub sidecar: Option<String>,
    pub sidecar_timeout_secs: Option<f64>,
    pub stage1_tag: Option<String>,
    pub rerank_tag: Option<String>,
    pub qrels: Option<PathBuf>,
    pub binarize_at: Option<u8>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        ConfigLayer { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn merge(self, top: ConfigLayer) -> ConfigLayer {
        let base = self;
        overlay!(base, top; index, conversations, manual, annotations, cues, stage1_method,
            rerank_method, mu, k, prf, fb_docs, fb_terms, gamma, depth, engine, sidecar,
            sidecar_timeout_secs, stage1_tag, rerank_tag, qrels, binarize_at, out_dir)
    }

    /// Fills defaults and checks everything that can be checked without
    /// reading the inputs.
    pub fn resolve(self) -> Result<PipelineConfig> {
        let required = |p: Option<PathBuf>, name: &str| {
            p.ok_or_else(|| Error::Config(format!("missing required setting `{name}`")))
        };
        let method = |m: Option<String>| m.map_or(Ok(Method::Plain), |m| m.parse());
        let prf_defaults = PrfParams::<f64>::default();
        let ret_defaults = RetrievalParams::<f64>::default();
        let rr_defaults = RerankParams::default();
        let cfg = PipelineConfig {
            index: required(self.index, "index")?,
            conversations: required(self.conversations, "conversations")?,
            manual: self.manual,
            annotations: self.annotations,
            cues: self.cues,
            stage1_method: method(self.stage1_method)?,
            rerank_method: method(self.rerank_method)?,
            retrieval: RetrievalParams {
                mu: self.mu.unwrap_or(ret_defaults.mu),
                k: self.k.unwrap_or(ret_defaults.k),
            },
            prf: self.prf.unwrap_or(false).then(|| PrfParams {
                fb_docs: self.fb_docs.unwrap_or(prf_defaults.fb_docs),
                fb_terms: self.fb_terms.unwrap_or(prf_defaults.fb_terms),
                gamma: self.gamma.unwrap_or(prf_defaults.gamma),
            }),
            rerank: RerankParams {
                depth: self.depth.unwrap_or(rr_defaults.depth),
                engine: self.engine.map_or(Ok(rr_defaults.engine), |e| e.parse())?,
            },
            sidecar: self.sidecar,
            sidecar_timeout: match self.sidecar_timeout_secs {
                None => crate::rerank::DEFAULT_TIMEOUT,
                Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
                Some(s) => return Err(Error::Config(format!("sidecar timeout must be positive, got {s}"))),
            },
            stage1_tag: self.stage1_tag,
            rerank_tag: self.rerank_tag,
            qrels: self.qrels,
            binarize_at: self.binarize_at.unwrap_or(1),
            out_dir: required(self.out_dir, "out_dir")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully specified pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub index: PathBuf,
    pub conversations: PathBuf,
    pub manual: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub cues: Option<PathBuf>,
    pub stage1_method: Method,
    pub rerank_method: Method,
    pub retrieval: RetrievalParams<f64>,
    pub prf: Option<PrfParams<f64>>,
    pub rerank: RerankParams,
    pub sidecar: Option<String>,
    pub sidecar_timeout: Duration,
    pub stage1_tag: Option<String>,
    pub rerank_tag: Option<String>,
    pub qrels: Option<PathBuf>,
    pub binarize_at: u8,
    pub out_dir: PathBuf,
}

fn must_exist(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        must_exist(&self.index, "index")?;
        must_exist(&self.conversations, "conversations file")?;
        for (p, what) in [
            (&self.manual, "manual rewrites file"),
            (&self.annotations, "annotations file"),
            (&self.cues, "cue lexicon"),
            (&self.qrels, "qrels file"),
        ] {
            if let Some(p) = p {
                must_exist(p, what)?;
            }
        }
        if self.manual.is_none() && (self.stage1_method == Method::Manual || self.rerank_method == Method::Manual) {
            return Err(Error::Config("method `manual` needs a manual rewrites file".into()));
        }
        self.retrieval.validate()?;
        if let Some(prf) = &self.prf {
            prf.validate()?;
        }
        if self.rerank.depth == 0 {
            return Err(Error::Config("rerank depth must be at least 1".into()));
        }
        if self.rerank.engine == Engine::External && self.sidecar.is_none() {
            return Err(Error::Config("engine `external` needs a sidecar command".into()));
        }
        if !(1..=2).contains(&self.binarize_at) {
            return Err(Error::Config(format!(
                "binarize_at must be 1 or 2, got {}",
                self.binarize_at
            )));
        }
        Ok(())
    }
}

/// Everything `rewrite` needs besides the method.
pub fn load_rewrite_inputs(
    conversations: &Path,
    manual: Option<&Path>,
    annotations: Option<&Path>,
    cues: Option<&Path>,
) -> Result<(Vec<Conversation>, Rewriter)> {
    let mut convs = load_conversations(conversations)?;
    if let Some(m) = manual {
        attach_manual(&mut convs, m)?;
    }
    let cues = match cues {
        Some(p) => CueLexicon::load(p)?,
        None => CueLexicon::default(),
    };
    let mut rewriter = Rewriter::new(Analyzer::default(), cues);
    if let Some(a) = annotations {
        rewriter = rewriter.with_annotations(load_annotations(a)?);
    }
    Ok((convs, rewriter))
}

/// Retrieves for every query, in input order. A query with no term known
/// to the collection yields an empty list rather than an error.
pub fn search_stage<S: Score>(
    index: &Index,
    queries: &[(String, String)],
    params: &RetrievalParams<S>,
    prf: Option<&PrfParams<S>>,
) -> Result<Vec<RankedList<S>>> {
    params.validate()?;
    queries
        .par_iter()
        .map(|(turn, text)| match retrieve(index, text, params, prf) {
            Ok(list) => Ok(list.with_turn(turn.clone())),
            Err(Error::EmptyQuery) => {
                log::warn!("{turn}: query {text:?} has no indexed terms, nothing retrieved");
                let tag = if prf.is_some() { "rm3" } else { "ql" };
                Ok(RankedList::new(turn.clone(), tag))
            }
            Err(e) => Err(e),
        })
        .collect()
}

/// Re-ranks the run turn by turn in the order of `queries`. Turns that are
/// absent from the run or retrieved nothing are skipped.
pub fn rerank_stage<S: Score>(
    index: &Index,
    run: &Run<S>,
    queries: &[(String, String)],
    params: &RerankParams,
    mu: S,
    sidecar: Option<&mut SidecarClient>,
) -> Result<Vec<RankedList<S>>> {
    let known: std::collections::HashSet<&str> = queries.iter().map(|(t, _)| t.as_str()).collect();
    for turn in run.keys().filter(|t| !known.contains(t.as_str())) {
        log::warn!("{turn}: in the run but has no re-ranking query, dropped");
    }
    let sets = queries
        .iter()
        .filter_map(|(turn, text)| match run.get(turn) {
            Some(list) if !list.is_empty() => Some(make_candidates(list, index, text, params.depth)),
            _ => {
                log::info!("{turn}: no first-stage results to re-rank");
                None
            }
        })
        .collect::<Result<Vec<_>>>()?;
    match (params.engine, sidecar) {
        (Engine::Lexical, _) => sets.par_iter().map(|c| rerank_lexical(c, index, mu)).collect(),
        (Engine::External, Some(sc)) => sets.iter().map(|c| rerank_external(c, sc)).collect(),
        (Engine::External, None) => Err(Error::Config("engine `external` needs a sidecar".into())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<S> {
    pub stage1_rewrites: PathBuf,
    pub rerank_rewrites: PathBuf,
    pub stage1_run: PathBuf,
    pub rerank_run: PathBuf,
    pub stage1_report: Option<MetricReport<S>>,
    pub rerank_report: Option<MetricReport<S>>,
}

/// Runs all stages and writes their artifacts into `cfg.out_dir`.
pub fn run_pipeline<S: Score>(cfg: &PipelineConfig) -> Result<PipelineOutput<S>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let out = |name: &str| cfg.out_dir.join(name);

    let index = Index::load(&cfg.index).map_err(|e| e.in_stage("index"))?;

    let (stage1_q, rerank_q) = (|| {
        let (convs, rewriter) = load_rewrite_inputs(
            &cfg.conversations,
            cfg.manual.as_deref(),
            cfg.annotations.as_deref(),
            cfg.cues.as_deref(),
        )?;
        let s1 = rewriter.rewrite_all(&convs, cfg.stage1_method)?;
        let rr = if cfg.rerank_method == cfg.stage1_method {
            s1.clone()
        } else {
            rewriter.rewrite_all(&convs, cfg.rerank_method)?
        };
        write_file(&out(STAGE1_REWRITES), |w| write_rewrites(w, &s1))?;
        write_file(&out(RERANK_REWRITES), |w| write_rewrites(w, &rr))?;
        Ok((s1, rr))
    })()
    .map_err(|e: Error| e.in_stage("rewrite"))?;

    let params = RetrievalParams {
        mu: S::from_f64_lossy(cfg.retrieval.mu),
        k: cfg.retrieval.k,
    };
    let prf = cfg.prf.map(|p| PrfParams {
        fb_docs: p.fb_docs,
        fb_terms: p.fb_terms,
        gamma: S::from_f64_lossy(p.gamma),
    });
    (|| {
        let mut lists = search_stage(&index, &stage1_q, &params, prf.as_ref())?;
        if let Some(tag) = &cfg.stage1_tag {
            lists = lists.into_iter().map(|l| l.with_tag(tag.clone())).collect();
        }
        write_file(&out(STAGE1_RUN), |w| write_runs(w, &lists))
    })()
    .map_err(|e: Error| e.in_stage("search"))?;

    // Re-read the run from disk so re-ranking sees exactly what a
    // separate `rerank` invocation would.
    let stage1: Run<S> = parse_run(&out(STAGE1_RUN)).map_err(|e| e.in_stage("search"))?;
    let reranked: Run<S> = (|| {
        let mut sidecar = match (&cfg.sidecar, cfg.rerank.engine) {
            (Some(cmd), Engine::External) => Some(SidecarClient::spawn_shell(cmd, cfg.sidecar_timeout)?),
            _ => None,
        };
        let mut lists = rerank_stage(&index, &stage1, &rerank_q, &cfg.rerank, params.mu, sidecar.as_mut())?;
        if let Some(tag) = &cfg.rerank_tag {
            lists = lists.into_iter().map(|l| l.with_tag(tag.clone())).collect();
        }
        write_file(&out(RERANK_RUN), |w| write_runs(w, &lists))?;
        Ok(lists.into_iter().map(|l| (l.turn_id.clone(), l)).collect())
    })()
    .map_err(|e: Error| e.in_stage("rerank"))?;

    let (stage1_report, rerank_report) = match &cfg.qrels {
        None => (None, None),
        Some(qrels) => {
            let (a, b) = (|| {
                let judgments = parse_qrels(qrels)?;
                let a = compute(&stage1, &judgments, cfg.binarize_at)?;
                let b = compute(&reranked, &judgments, cfg.binarize_at)?;
                write_file(&out(STAGE1_EVAL), |w| write_tsv(w, &a, &Metric::ALL))?;
                write_file(&out(RERANK_EVAL), |w| write_tsv(w, &b, &Metric::ALL))?;
                Ok((a, b))
            })()
            .map_err(|e: Error| e.in_stage("eval"))?;
            (Some(a), Some(b))
        }
    };

    Ok(PipelineOutput {
        stage1_rewrites: out(STAGE1_REWRITES),
        rerank_rewrites: out(RERANK_REWRITES),
        stage1_run: out(STAGE1_RUN),
        rerank_run: out(RERANK_RUN),
        stage1_report,
        rerank_report,
    })
}
