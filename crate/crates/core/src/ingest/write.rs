use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::tabular::{escape_value, EDGES_HEADER, FEATURES_HEADER, NODES_HEADER, SLOTS_HEADER};
use super::LogicalCorpus;
use crate::model::{CorpusMeta, Target};

fn xml_attr(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

fn meta_lines(meta: &CorpusMeta, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "otypes={}", meta.otypes.join(","))?;
    writeln!(w, "slot_otype={}", meta.slot_otype)?;
    if !meta.int_features.is_empty() {
        writeln!(w, "int_features={}", meta.int_features.join(","))?;
    }
    for p in &meta.provenance {
        writeln!(w, "provenance={p}")?;
    }
    Ok(())
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the corpus in the GrAF subset and returns the header path.
///
/// Output is split over four annotation files (slots, other nodes, edges,
/// features).
pub fn write_graf(c: &LogicalCorpus, dir: impl AsRef<Path>) -> io::Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("text.txt"), c.text.as_str())?;

    let header = dir.join("header.txt");
    let mut w = create(&header)?;
    writeln!(w, "# GrAF subset corpus header")?;
    writeln!(w, "text=text.txt")?;
    writeln!(w, "annotations=slots.xml nodes.xml edges.xml features.xml")?;
    meta_lines(&c.meta, &mut w)?;
    w.flush()?;

    let open = |name: &str| -> io::Result<BufWriter<File>> {
        let mut w = create(&dir.join(name))?;
        writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
        writeln!(w, "<graph>")?;
        Ok(w)
    };
    let close = |mut w: BufWriter<File>| -> io::Result<()> {
        writeln!(w, "</graph>")?;
        w.flush()
    };

    let mut slots = open("slots.xml")?;
    for s in &c.slots {
        writeln!(
            slots,
            r#"  <region xml:id="r{}" anchors="{} {}"/>"#,
            s.index, s.region.start, s.region.end
        )?;
    }
    let mut others = open("nodes.xml")?;
    for n in &c.nodes {
        if n.otype == c.meta.slot_otype && n.monads.len() == 1 {
            writeln!(
                slots,
                r#"  <node xml:id="{}"><link targets="r{}"/></node>"#,
                n.id,
                n.monads.first()
            )?;
        } else {
            writeln!(
                others,
                r#"  <node xml:id="{}" otype="{}" monads="{}"/>"#,
                n.id,
                xml_attr(&n.otype),
                n.monads
            )?;
        }
    }
    close(slots)?;
    close(others)?;

    let mut edges = open("edges.xml")?;
    for e in &c.edges {
        writeln!(
            edges,
            r#"  <edge xml:id="{}" from="{}" to="{}" label="{}"/>"#,
            e.id,
            e.from,
            e.to,
            xml_attr(&e.label)
        )?;
    }
    close(edges)?;

    let mut feats = open("features.xml")?;
    let mut i = 0;
    while i < c.features.len() {
        let target = c.features[i].target;
        writeln!(feats, r#"  <a ref="{target}">"#)?;
        while i < c.features.len() && c.features[i].target == target {
            let f = &c.features[i];
            writeln!(
                feats,
                r#"    <f name="{}" value="{}"/>"#,
                xml_attr(&f.key),
                xml_attr(&f.value)
            )?;
            i += 1;
        }
        writeln!(feats, "  </a>")?;
    }
    close(feats)?;
    Ok(header)
}

/// Writes the corpus as a tabular directory.
pub fn write_tabular(c: &LogicalCorpus, dir: impl AsRef<Path>) -> io::Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("text.txt"), c.text.as_str())?;

    let mut w = create(&dir.join("meta.txt"))?;
    meta_lines(&c.meta, &mut w)?;
    w.flush()?;

    let mut w = create(&dir.join("slots.tsv"))?;
    writeln!(w, "{}", SLOTS_HEADER.join("\t"))?;
    for s in &c.slots {
        writeln!(w, "{}\t{}\t{}", s.index, s.region.start, s.region.end)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("nodes.tsv"))?;
    writeln!(w, "{}", NODES_HEADER.join("\t"))?;
    for n in &c.nodes {
        writeln!(w, "{}\t{}\t{}", n.id, n.otype, n.monads)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("edges.tsv"))?;
    writeln!(w, "{}", EDGES_HEADER.join("\t"))?;
    for e in &c.edges {
        writeln!(w, "{}\t{}\t{}\t{}", e.id, e.from, e.to, e.label)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("features.tsv"))?;
    writeln!(w, "{}", FEATURES_HEADER.join("\t"))?;
    for f in &c.features {
        let kind = match f.target {
            Target::Node(_) => "N",
            Target::Edge(_) => "E",
        };
        writeln!(w, "{kind}\t{}\t{}\t{}", f.target, f.key, escape_value(&f.value))?;
    }
    w.flush()
}
