use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;

use fabric::mql;

use super::{load, run_query, CliError, Ctx, Limits};

const HELP: &str = "\
Type a query on one line, or a command:
  :load PATH     switch to another image
  :limit N       stop after N matches (:limit off to clear)
  :explain QUERY show the evaluation plan
  :help          this text
  :quit          leave";

/// Reads queries from stdin until `:quit` or end of input. Errors in one
/// input are reported and the session goes on.
pub fn run(ctx: &Ctx, image: &Path, mut limits: Limits) -> Result<(), CliError> {
    let mut corpus = load(ctx, image)?;
    let mut current: PathBuf = image.to_path_buf();
    let interactive = io::stdin().is_terminal();
    if interactive {
        println!("{} loaded ({} nodes). :help for commands.", current.display(), corpus.node_count());
    }
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("fabric> ");
            let _ = io::stdout().flush();
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| CliError::io("<stdin>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (cmd, arg) = match line.strip_prefix(':') {
            Some(rest) => {
                let mut parts = rest.splitn(2, char::is_whitespace);
                (parts.next().unwrap_or(""), parts.next().unwrap_or("").trim())
            }
            None => ("", line),
        };
        let result = match cmd {
            "" => {
                ctx.cancel.store(false, Ordering::Relaxed);
                limits
                    .options(&ctx.cancel)
                    .and_then(|opts| run_query(ctx, &corpus, arg, &opts))
            }
            "quit" | "q" | "exit" => break,
            "help" => {
                println!("{HELP}");
                Ok(())
            }
            "load" if !arg.is_empty() => load(ctx, Path::new(arg)).map(|c| {
                corpus = c;
                current = PathBuf::from(arg);
                println!("{} loaded ({} nodes)", current.display(), corpus.node_count());
            }),
            "limit" => match arg {
                "off" | "none" | "0" => {
                    limits.limit = None;
                    println!("no match limit");
                    Ok(())
                }
                n => match n.parse::<usize>() {
                    Ok(n) => {
                        limits.limit = Some(n);
                        println!("limit {n}");
                        Ok(())
                    }
                    Err(_) => Err(CliError::usage(format!(":limit takes a number or `off`, got `{n}`"))),
                },
            },
            "explain" if !arg.is_empty() => mql::parse(arg)
                .map(|q| print!("{}", mql::explain(&q, &corpus)))
                .map_err(|e| mql::QueryError::from(e).into()),
            "load" | "explain" => Err(CliError::usage(format!(":{cmd} needs an argument"))),
            other => Err(CliError::usage(format!("unknown command `:{other}` (try :help)"))),
        };
        if let Err(e) = result {
            super::report(ctx.format, &e);
        }
    }
    Ok(())
}
