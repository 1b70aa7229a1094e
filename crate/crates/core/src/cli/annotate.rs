use std::path::{Path, PathBuf};

use clap::Subcommand;
use fabric::annotations::{
    export_store, import_store, result_page, AnnotationStore, ImportWarning, MarginFilter, QueryMeta,
    SavedQuery,
};
use fabric::NodeId;
use serde_json::json;

use super::{emit_json, load, CliError, Ctx, Format, QuerySource};

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Evaluate a query and save it with its result snapshot.
    Save {
        #[arg(long)]
        name: String,
        #[arg(long)]
        author: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Hide from public-only margins.
        #[arg(long)]
        private: bool,
        #[arg(long, default_value = "verse")]
        passage_otype: String,
        #[command(flatten)]
        query: QuerySource,
    },
    /// List saved queries.
    List {
        #[arg(long)]
        author: Option<String>,
    },
    /// Saved queries with hits in one passage, by author then name.
    Margin {
        passage: NodeId,
        #[arg(long)]
        author: Option<String>,
        #[arg(long)]
        public_only: bool,
        #[arg(long, default_value = "verse")]
        passage_otype: String,
    },
    /// One page of a saved query's passages.
    Page {
        id: u64,
        #[arg(long, default_value_t = 1)]
        page: usize,
        #[arg(long, default_value_t = 25)]
        page_size: usize,
    },
    /// Recompute a saved query's snapshot on this image.
    Refresh { id: u64 },
    /// Write the store to another file.
    Export { out: PathBuf },
    /// Replace the store with a file, checking it against the image.
    Import { file: PathBuf },
}

fn open_store(path: &Path, fingerprint: &str) -> Result<AnnotationStore, CliError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(AnnotationStore::from_json(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(AnnotationStore::new(fingerprint)),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn summary(q: &SavedQuery) -> serde_json::Value {
    json!({
        "id": q.id, "name": q.name, "author": q.author, "query": q.query,
        "is_public": q.is_public, "total_matches": q.total_matches,
        "total_verses": q.total_verses, "stale": q.stale,
    })
}

fn line(q: &SavedQuery) -> String {
    let flags = match (q.is_public, q.stale) {
        (true, false) => "",
        (false, false) => " [private]",
        (true, true) => " [stale]",
        (false, true) => " [private, stale]",
    };
    format!(
        "{:>4}  {} / {}{flags}: {} matches in {} passages  {}",
        q.id, q.author, q.name, q.total_matches, q.total_verses, q.query
    )
}

pub fn run(ctx: &Ctx, image: &Path, store_path: &Path, action: Action) -> Result<(), CliError> {
    let corpus = load(ctx, image)?;
    let mut store = open_store(store_path, corpus.fingerprint())?;
    let warnings = store.check_against(&corpus)?;
    for ImportWarning::Stale { id, name } in &warnings {
        ctx.note(|| format!("saved query {id} ({name}) was computed on another image; marked stale"));
    }
    match action {
        Action::Save {
            name,
            author,
            description,
            private,
            passage_otype,
            query,
        } => {
            let text = query.read()?;
            let meta = QueryMeta {
                name,
                author,
                description,
                is_public: !private,
                passage_otype,
            };
            let saved = store.save_query(&corpus, meta, &text)?.clone();
            export_store(&store, store_path)?;
            match ctx.format {
                Format::Json => emit_json(&summary(&saved))?,
                _ => println!("{}", line(&saved)),
            }
        }
        Action::List { author } => {
            let qs: Vec<&SavedQuery> = store
                .queries()
                .iter()
                .filter(|q| author.as_ref().is_none_or(|a| &q.author == a))
                .collect();
            match ctx.format {
                Format::Json => emit_json(&json!(qs.iter().map(|q| summary(q)).collect::<Vec<_>>()))?,
                Format::Tsv => {
                    println!("# id\tauthor\tname\tpublic\tmatches\tpassages\tstale\tquery");
                    for q in qs {
                        println!(
                            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                            q.id, q.author, q.name, q.is_public, q.total_matches, q.total_verses, q.stale,
                            q.query.replace(['\t', '\n'], " ")
                        );
                    }
                }
                Format::Text => {
                    for q in qs {
                        println!("{}", line(q));
                    }
                }
            }
        }
        Action::Margin {
            passage,
            author,
            public_only,
            passage_otype,
        } => {
            let filter = MarginFilter {
                author,
                public_only,
                passage_otype,
            };
            let entries = store.margin(&corpus, passage, &filter)?;
            match ctx.format {
                Format::Json => emit_json(&json!(entries
                    .iter()
                    .map(|e| json!({ "query": summary(e.query), "nodes": e.nodes }))
                    .collect::<Vec<_>>()))?,
                Format::Tsv => {
                    println!("# id\tauthor\tname\tnodes");
                    for e in entries {
                        let nodes: Vec<String> = e.nodes.iter().map(NodeId::to_string).collect();
                        println!("{}\t{}\t{}\t{}", e.query.id, e.query.author, e.query.name, nodes.join(","));
                    }
                }
                Format::Text => {
                    for e in entries {
                        let shown: Vec<String> = e
                            .nodes
                            .iter()
                            .map(|&n| format!("{n} \"{}\"", corpus.text_of(n)))
                            .collect();
                        println!("{} / {}: {}", e.query.author, e.query.name, shown.join(", "));
                    }
                }
            }
        }
        Action::Page { id, page, page_size } => {
            let q = store.get(id).ok_or(fabric::annotations::AnnotationError::UnknownQuery(id))?;
            let p = result_page(q, page, page_size)?;
            match ctx.format {
                Format::Json => emit_json(&json!({ "nav": p.nav, "entries": p.entries }))?,
                Format::Tsv => {
                    println!("# passage\tnodes");
                    for e in p.entries {
                        let nodes: Vec<String> = e.nodes.iter().map(NodeId::to_string).collect();
                        println!("{}\t{}", e.passage, nodes.join(","));
                    }
                }
                Format::Text => {
                    let note = if p.nav.clamped { " (requested page out of range)" } else { "" };
                    println!("page {} of {}{note}", p.nav.page, p.nav.total_pages);
                    for e in p.entries {
                        let nodes: Vec<String> = e.nodes.iter().map(NodeId::to_string).collect();
                        println!("  {}  {}", e.passage, nodes.join(" "));
                    }
                    let nav = |label: &str, v: Option<usize>| v.map(|n| format!("{label} {n}"));
                    let links: Vec<String> = [
                        nav("first", p.nav.first),
                        nav("prev", p.nav.prev),
                        nav("next", p.nav.next),
                        nav("last", p.nav.last),
                    ]
                    .into_iter()
                    .flatten()
                    .collect();
                    if !links.is_empty() {
                        println!("{}", links.join(" | "));
                    }
                }
            }
        }
        Action::Refresh { id } => {
            let q = store.refresh_query(&corpus, id)?.clone();
            export_store(&store, store_path)?;
            match ctx.format {
                Format::Json => emit_json(&summary(&q))?,
                _ => println!("{}", line(&q)),
            }
        }
        Action::Export { out } => {
            export_store(&store, &out)?;
            if ctx.format != Format::Json {
                println!("wrote {} ({} saved queries)", out.display(), store.queries().len());
            } else {
                emit_json(&json!({ "path": out.display().to_string(), "queries": store.queries().len() }))?;
            }
        }
        Action::Import { file } => {
            let (imported, warnings) = import_store(&file, &corpus)?;
            export_store(&imported, store_path)?;
            let stale: Vec<u64> = warnings
                .iter()
                .map(|ImportWarning::Stale { id, .. }| *id)
                .collect();
            match ctx.format {
                Format::Json => emit_json(&json!({ "queries": imported.queries().len(), "stale": stale }))?,
                _ => {
                    for ImportWarning::Stale { id, name } in &warnings {
                        eprintln!("warning: saved query {id} ({name}) was computed on another image; marked stale");
                    }
                    println!("imported {} saved queries", imported.queries().len());
                }
            }
        }
    }
    Ok(())
}
