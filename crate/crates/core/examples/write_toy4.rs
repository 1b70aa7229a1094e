//! Writes the four-word sample corpus in both source formats.
//!
//! cargo run --example write_toy4 -- OUT_DIR
//!
//! Produces OUT_DIR/graf (open with header.txt) and OUT_DIR/tabular.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy4".into()));
    let corpus = fabric::toy::toy4();
    let header = fabric::ingest::write_graf(&corpus, out.join("graf"))?;
    fabric::ingest::write_tabular(&corpus, out.join("tabular"))?;
    println!("{}", header.display());
    println!("{}", out.join("tabular").display());
    Ok(())
}
