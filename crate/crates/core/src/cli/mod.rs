mod annotate;
mod error;
mod output;
mod repl;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fabric::mql::{self, EvalOptions};
use fabric::{compile, featuredoc, ingest, verify, Corpus, LogicalCorpus};

pub use error::CliError;
use output::MatchWriter;

const ENV_HELP: &str = "ENVIRONMENT:
  FABRIC_CACHE_DIR  Reserved. Read by nothing in this version.";

/// Standoff annotation corpus engine.
#[derive(Debug, Parser)]
#[command(name = "fabric", version, after_help = ENV_HELP)]
pub struct Cli {
    /// Print timings and progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Tsv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a corpus (GrAF header file or tabular directory) and write an image.
    Compile {
        src: PathBuf,
        out: PathBuf,
    },
    /// Show statistics of an image.
    Info {
        image: PathBuf,
        /// Check every section checksum and report per section.
        #[arg(long)]
        verify: bool,
    },
    /// Run a query and stream the matches.
    Query {
        image: PathBuf,
        #[command(flatten)]
        query: QuerySource,
        #[command(flatten)]
        limits: Limits,
        /// Print the evaluation plan instead of running the query.
        #[arg(long)]
        explain: bool,
    },
    /// Interactive queries against one loaded image.
    Repl {
        image: PathBuf,
        #[command(flatten)]
        limits: Limits,
    },
    /// Write feature documentation with value frequency lists.
    Features {
        image: PathBuf,
        out_dir: PathBuf,
    },
    /// Saved queries as annotations.
    Annotate {
        image: PathBuf,
        /// Store file; created on first save.
        store: PathBuf,
        #[command(subcommand)]
        action: annotate::Action,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct QuerySource {
    /// Query text.
    #[arg(short = 'q', long = "query")]
    pub text: Option<String>,
    /// File holding the query.
    #[arg(short = 'f', long = "file")]
    pub file: Option<PathBuf>,
}

impl QuerySource {
    pub fn read(&self) -> Result<String, CliError> {
        match (&self.text, &self.file) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some(f)) => std::fs::read_to_string(f).map_err(|e| CliError::io(f, e)),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Limits {
    /// Stop after this many matches.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Give up after this many seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Object type that counts as a passage.
    #[arg(long, default_value = "verse")]
    pub passage_otype: String,
}

impl Limits {
    pub fn options(&self, cancel: &Arc<AtomicBool>) -> Result<EvalOptions, CliError> {
        let timeout = match self.timeout {
            Some(t) if !(t.is_finite() && t >= 0.0) => {
                return Err(CliError::usage(format!("--timeout must be a non-negative number, got {t}")))
            }
            t => t.map(Duration::from_secs_f64),
        };
        Ok(EvalOptions {
            max_matches: self.limit,
            timeout,
            cancel: Some(cancel.clone()),
            passage_otype: self.passage_otype.clone(),
        })
    }
}

pub struct Ctx {
    pub format: Format,
    pub verbose: u8,
    pub cancel: Arc<AtomicBool>,
}

impl Ctx {
    pub fn note(&self, msg: impl FnOnce() -> String) {
        if self.verbose > 0 {
            eprintln!("{}", msg());
        }
    }
}

pub fn run(cli: Cli, cancel: Arc<AtomicBool>) -> Result<(), CliError> {
    let ctx = Ctx {
        format: cli.format,
        verbose: cli.verbose,
        cancel,
    };
    match cli.command {
        Command::Compile { src, out } => cmd_compile(&ctx, &src, &out),
        Command::Info { image, verify } => cmd_info(&ctx, &image, verify),
        Command::Query {
            image,
            query,
            limits,
            explain,
        } => cmd_query(&ctx, &image, &query.read()?, &limits, explain),
        Command::Repl { image, limits } => repl::run(&ctx, &image, limits),
        Command::Features { image, out_dir } => cmd_features(&ctx, &image, &out_dir),
        Command::Annotate { image, store, action } => annotate::run(&ctx, &image, &store, action),
    }
}

pub fn load(ctx: &Ctx, image: &Path) -> Result<Corpus, CliError> {
    let t = Instant::now();
    let c = Corpus::load(image)?;
    ctx.note(|| format!("loaded {} in {:.3}s", image.display(), t.elapsed().as_secs_f64()));
    Ok(c)
}

fn ingest_source(src: &Path) -> Result<LogicalCorpus, CliError> {
    if src.is_dir() {
        Ok(ingest::parse_tabular(src)?)
    } else {
        Ok(ingest::parse_graf(src)?)
    }
}

fn emit_json(v: &serde_json::Value) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::io("<stdout>", e.into()))?;
    writeln!(out).map_err(|e| CliError::io("<stdout>", e))
}

fn cmd_compile(ctx: &Ctx, src: &Path, out: &Path) -> Result<(), CliError> {
    let t = Instant::now();
    let logical = ingest_source(src)?;
    ctx.note(|| format!("ingested {} in {:.3}s", src.display(), t.elapsed().as_secs_f64()));
    let summary = compile(&logical, out)?;
    match ctx.format {
        Format::Json => emit_json(&serde_json::to_value(&summary).expect("serializes")),
        Format::Tsv => {
            println!("# section\tbytes");
            for (name, len) in &summary.sections {
                println!("{name}\t{len}");
            }
            Ok(())
        }
        Format::Text => {
            println!("wrote {} ({} bytes)", out.display(), summary.total_bytes);
            println!(
                "{} slots, {} nodes, {} edges, {} features, {} distinct monad sets",
                summary.slots, summary.nodes, summary.edges, summary.features, summary.distinct_monad_sets
            );
            for d in &summary.dictionaries {
                println!("  {} {}: {} values, {} assignments", d.kind.code(), d.key, d.values, d.assignments);
            }
            Ok(())
        }
    }
}

fn cmd_info(ctx: &Ctx, image: &Path, check: bool) -> Result<(), CliError> {
    let report = if check {
        let r = verify(image)?;
        Some(r)
    } else {
        None
    };
    if let Some(r) = report.as_ref().filter(|r| !r.is_ok()) {
        let bad = r.first_bad().expect("not ok");
        if ctx.format == Format::Json {
            emit_json(&serde_json::json!({ "verify": r }))?;
        } else {
            for s in &r.sections {
                eprintln!("{:<10} {:?}", s.section, s.status);
            }
        }
        return Err(CliError::corrupt(format!("section {} failed verification: {:?}", bad.section, bad.status)));
    }
    let c = load(ctx, image)?;
    let stats = c.stats();
    match ctx.format {
        Format::Json => {
            let mut v = serde_json::to_value(stats).expect("serializes");
            let o = v.as_object_mut().expect("object");
            o.insert("slots".into(), c.slot_count().into());
            o.insert("otypes".into(), c.ranking().ordered().into());
            o.insert("slot_otype".into(), c.meta().slot_otype.clone().into());
            o.insert("fingerprint".into(), c.fingerprint().into());
            o.insert("provenance".into(), c.meta().provenance.clone().into());
            if let Some(r) = report {
                o.insert("verify".into(), serde_json::to_value(r).expect("serializes"));
            }
            emit_json(&v)
        }
        Format::Tsv => {
            println!("# key\tvalue");
            println!("words\t{}\nnodes\t{}\nfeatures\t{}\nedges\t{}", stats.words, stats.nodes, stats.features, stats.edges);
            println!("slots\t{}\nfingerprint\t{}", c.slot_count(), c.fingerprint());
            Ok(())
        }
        Format::Text => {
            println!("fingerprint  {}", c.fingerprint());
            println!("words        {}", stats.words);
            println!("nodes        {}", stats.nodes);
            println!("features     {}", stats.features);
            println!("edges        {}", stats.edges);
            println!("slots        {}", c.slot_count());
            println!("otypes       {}", c.ranking().ordered().join(" "));
            for p in &c.meta().provenance {
                println!("provenance   {p}");
            }
            if let Some(r) = report {
                for s in &r.sections {
                    println!("section      {:<10} {:>10} bytes  ok", s.section, s.length);
                }
            }
            Ok(())
        }
    }
}

pub fn run_query(ctx: &Ctx, c: &Corpus, text: &str, opts: &EvalOptions) -> Result<(), CliError> {
    let q = mql::parse(text).map_err(mql::QueryError::from)?;
    let t = Instant::now();
    let stdout = io::stdout();
    let mut w = MatchWriter::new(ctx.format, c, &opts.passage_otype, stdout.lock());
    w.begin()?;
    let outcome = mql::evaluate_with(c, &q, opts, |m| w.write_match(&m))?;
    w.finish(&outcome)?;
    ctx.note(|| format!("{} matches in {:.3}s", outcome.matches, t.elapsed().as_secs_f64()));
    if w.failed() {
        // the reader went away; nothing more to say
        return Ok(());
    }
    if outcome.cutoff == Some(mql::Cutoff::Cancelled) && ctx.cancel.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(CliError::interrupted());
    }
    Ok(())
}

fn cmd_query(ctx: &Ctx, image: &Path, text: &str, limits: &Limits, explain: bool) -> Result<(), CliError> {
    let opts = limits.options(&ctx.cancel)?;
    // parse before loading so syntax errors come back fast
    let q = mql::parse(text).map_err(mql::QueryError::from)?;
    let c = load(ctx, image)?;
    if explain {
        let plan = mql::explain(&q, &c);
        print!("{plan}");
        return Ok(());
    }
    run_query(ctx, &c, text, &opts)
}

fn cmd_features(ctx: &Ctx, image: &Path, out_dir: &Path) -> Result<(), CliError> {
    let c = load(ctx, image)?;
    let files = featuredoc::render_docs(&c, out_dir)?;
    match ctx.format {
        Format::Json => emit_json(&serde_json::json!({
            "files": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>()
        })),
        _ => {
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

/// Prints an error to stderr, as JSON when that format was asked for.
pub fn report(format: Format, e: &CliError) {
    if format == Format::Json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("error: {}", e.message);
    }
}
