use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use convsearch::eval::{compute, parse_qrels, parse_run, write_table, write_tsv, Metric};
use convsearch::index::{read_corpus, CorpusFormat};
use convsearch::pipeline::{self, load_rewrite_inputs, rerank_stage, search_stage, ConfigLayer};
use convsearch::rerank::{Engine, RerankParams, SidecarClient};
use convsearch::retrieval::write_runs;
use convsearch::rewriting::{read_turn_tsv, write_rewrites, Method};
use convsearch::textpipe::{AnalyzerConfig, StemmerKind};
use convsearch::{Index, PrfParams, RetrievalParams};

#[derive(Parser)]
#[command(name = "convsearch", version, about = "Conversational passage search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a passage collection
    Index(IndexArgs),
    /// Rewrite conversation utterances into standalone queries
    Rewrite(RewriteArgs),
    /// First-stage retrieval for a file of queries
    Search(SearchArgs),
    /// Re-rank the top of a run with (possibly different) queries
    Rerank(RerankArgs),
    /// Score a run against relevance judgments
    Eval(EvalArgs),
    /// Rewrite, search, re-rank and evaluate in one go
    Pipeline(Box<PipelineArgs>),
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: CorpusFormat,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Replace the bundled stopword list
    #[arg(long, conflicts_with = "no_stopwords")]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    no_stopwords: bool,
    #[arg(long, default_value = "porter")]
    stemmer: StemmerKind,
}

#[derive(Args)]
struct RewriteInputs {
    #[arg(long)]
    conversations: PathBuf,
    /// Manual rewrites, turn_id<TAB>text
    #[arg(long)]
    manual: Option<PathBuf>,
    /// External annotations (JSONL) overriding the built-in tagger
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Topic-shift cue phrases, one per line
    #[arg(long)]
    cues: Option<PathBuf>,
}

#[derive(Args)]
struct RewriteArgs {
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    inputs: RewriteInputs,
    /// Output file (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Queries, turn_id<TAB>text
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 2500.0)]
    mu: f64,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Expand queries with RM3 feedback
    #[arg(long)]
    prf: bool,
    #[arg(long, default_value_t = 20)]
    fb_docs: usize,
    #[arg(long, default_value_t = 20)]
    fb_terms: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Run tag (defaults to ql or rm3)
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RerankArgs {
    #[arg(long)]
    index: PathBuf,
    /// First-stage run
    #[arg(long)]
    run: PathBuf,
    /// Re-ranking queries, turn_id<TAB>text
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 200)]
    depth: usize,
    #[arg(long, default_value = "lexical")]
    engine: Engine,
    /// Sidecar command, run through sh -c
    #[arg(long)]
    sidecar: Option<String>,
    /// Seconds to wait for each sidecar reply
    #[arg(long, default_value_t = 120.0)]
    sidecar_timeout: f64,
    /// Smoothing for the lexical engine
    #[arg(long, default_value_t = 2500.0)]
    mu: f64,
    /// Run tag (defaults to the engine name)
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    run: PathBuf,
    /// Comma-separated subset, e.g. map,ndcg@3
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
    /// Lowest grade counted as relevant by binary metrics
    #[arg(long, default_value_t = 1)]
    binarize_at: u8,
    /// Also write per-turn values as TSV
    #[arg(long)]
    tsv: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML file with pipeline settings; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    conversations: Option<PathBuf>,
    #[arg(long)]
    manual: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    cues: Option<PathBuf>,
    #[arg(long)]
    stage1_method: Option<String>,
    #[arg(long)]
    rerank_method: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    prf: bool,
    #[arg(long)]
    fb_docs: Option<usize>,
    #[arg(long)]
    fb_terms: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    sidecar: Option<String>,
    #[arg(long)]
    sidecar_timeout: Option<f64>,
    #[arg(long)]
    stage1_tag: Option<String>,
    #[arg(long)]
    rerank_tag: Option<String>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    binarize_at: Option<u8>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl PipelineArgs {
    fn layer(self) -> ConfigLayer {
        ConfigLayer {
            index: self.index,
            conversations: self.conversations,
            manual: self.manual,
            annotations: self.annotations,
            cues: self.cues,
            stage1_method: self.stage1_method,
            rerank_method: self.rerank_method,
            mu: self.mu,
            k: self.k,
            prf: self.prf.then_some(true),
            fb_docs: self.fb_docs,
            fb_terms: self.fb_terms,
            gamma: self.gamma,
            depth: self.depth,
            engine: self.engine,
            sidecar: self.sidecar,
            sidecar_timeout_secs: self.sidecar_timeout,
            stage1_tag: self.stage1_tag,
            rerank_tag: self.rerank_tag,
            qrels: self.qrels,
            binarize_at: self.binarize_at,
            out_dir: self.out_dir,
        }
    }
}

/// Opens `path` for writing, or standard output when absent.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn index(args: IndexArgs) -> Result<()> {
    let mut cfg = AnalyzerConfig {
        stemmer: args.stemmer,
        ..AnalyzerConfig::default()
    };
    if args.no_stopwords {
        cfg.stopwords.clear();
    } else if let Some(path) = &args.stopwords {
        cfg = cfg.with_stopwords_file(path)?;
    }
    let corpus = read_corpus(&args.corpus, args.format)?;
    let index = Index::build(corpus, cfg)?;
    index.save(&args.out)?;
    let stats = index.stats();
    log::info!(
        "indexed {} passages, {} terms, vocabulary {}",
        stats.doc_count,
        stats.total_terms,
        stats.vocabulary_size
    );
    Ok(())
}

fn rewrite(args: RewriteArgs) -> Result<()> {
    let i = &args.inputs;
    let (convs, rewriter) = load_rewrite_inputs(
        &i.conversations,
        i.manual.as_deref(),
        i.annotations.as_deref(),
        i.cues.as_deref(),
    )?;
    let rewrites = rewriter.rewrite_all(&convs, args.method)?;
    let mut out = output(args.out.as_deref())?;
    write_rewrites(&mut out, &rewrites)?;
    out.flush()?;
    Ok(())
}

fn search(args: SearchArgs) -> Result<()> {
    let params = RetrievalParams { mu: args.mu, k: args.k };
    params.validate()?;
    let prf = args.prf.then_some(PrfParams {
        fb_docs: args.fb_docs,
        fb_terms: args.fb_terms,
        gamma: args.gamma,
    });
    let index = Index::load(&args.index)?;
    let queries = read_turn_tsv(&args.queries)?;
    let mut lists = search_stage(&index, &queries, &params, prf.as_ref())?;
    if let Some(tag) = args.tag {
        lists = lists.into_iter().map(|l| l.with_tag(tag.clone())).collect();
    }
    let mut out = output(args.out.as_deref())?;
    write_runs(&mut out, &lists)?;
    out.flush()?;
    Ok(())
}

fn rerank(args: RerankArgs) -> Result<()> {
    let params = RerankParams {
        depth: args.depth,
        engine: args.engine,
    };
    if params.depth == 0 {
        bail!("--depth must be at least 1");
    }
    if !(args.sidecar_timeout.is_finite() && args.sidecar_timeout > 0.0) {
        bail!("--sidecar-timeout must be positive");
    }
    let mut sidecar = match (args.engine, &args.sidecar) {
        (Engine::External, Some(cmd)) => Some(SidecarClient::spawn_shell(
            cmd,
            Duration::from_secs_f64(args.sidecar_timeout),
        )?),
        (Engine::External, None) => bail!("--engine external needs --sidecar"),
        (Engine::Lexical, _) => None,
    };
    let index = Index::load(&args.index)?;
    let run = parse_run(&args.run)?;
    let queries = read_turn_tsv(&args.queries)?;
    let mut lists = rerank_stage(&index, &run, &queries, &params, args.mu, sidecar.as_mut())?;
    if let Some(tag) = args.tag {
        lists = lists.into_iter().map(|l| l.with_tag(tag.clone())).collect();
    }
    let mut out = output(args.out.as_deref())?;
    write_runs(&mut out, &lists)?;
    out.flush()?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let metrics = args.metrics.unwrap_or_else(|| Metric::ALL.to_vec());
    let judgments = parse_qrels(&args.qrels)?;
    let run = parse_run(&args.run)?;
    let report = compute::<f64>(&run, &judgments, args.binarize_at)?;
    if let Some(path) = &args.tsv {
        let mut out = output(Some(path))?;
        write_tsv(&mut out, &report, &metrics)?;
        out.flush()?;
    }
    let mut out = output(None)?;
    write_table(&mut out, &report, &metrics)?;
    out.flush()?;
    Ok(())
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => ConfigLayer::load(path)?,
        None => ConfigLayer::default(),
    };
    let cfg = base.merge(args.layer()).resolve()?;
    let result = pipeline::run_pipeline::<f64>(&cfg)?;
    log::info!("runs written to {}", cfg.out_dir.display());
    let mut out = output(None)?;
    for (name, report) in [
        ("stage one", &result.stage1_report),
        ("re-ranked", &result.rerank_report),
    ] {
        if let Some(report) = report {
            writeln!(out, "{name}")?;
            write_table(&mut out, report, &Metric::ALL)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(a) => index(a),
        Command::Rewrite(a) => rewrite(a),
        Command::Search(a) => search(a),
        Command::Rerank(a) => rerank(a),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => run_pipeline(*a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
