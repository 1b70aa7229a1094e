//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Set `FABRIC_ETCBC` to a GrAF header or a compiled image of the
//! ETCBC data to run the last check; it is skipped otherwise.

mod common;

use std::cmp::Ordering;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{golden, order_ranking, random_corpus, random_node, random_query, rng, Shape};
use fabric::annotations::{export_store, import_store, paginate, snapshot, AnnotationStore, QueryMeta};
use fabric::compiler::compile_to_bytes;
use fabric::ingest::write_graf;
use fabric::model::canonical_compare;
use fabric::mql::{brute_force_evaluate, evaluate, parse, EvalOptions};
use fabric::{compile, parse_graf, Corpus};
use rand::Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_trips() -> Outcome {
    let t = Instant::now();
    for seed in 0..100 {
        let x = random_corpus(&mut rng(1000 + seed), Shape::ROUND_TRIP);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let header = write_graf(&x, dir.path()).map_err(|e| e.to_string())?;
        let ingested = parse_graf(&header).map_err(|e| format!("seed {seed}: {e}"))?;
        let image = dir.path().join("x.fab");
        compile(&ingested, &image).map_err(|e| format!("seed {seed}: {e}"))?;
        let loaded = Corpus::load(&image).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(loaded.to_logical() == ingested, || format!("seed {seed}: loaded corpus differs"))?;
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:.1?}"))?;
    Ok(format!("100 corpora identical after ingest, compile and load ({took:.1?})"))
}

fn oracle_pairs() -> Outcome {
    let t = Instant::now();
    let mut matched = 0;
    for seed in 0..500 {
        let logical = random_corpus(&mut rng(2000 + seed), Shape::ORACLE);
        let c = Corpus::from_logical(&logical).map_err(|e| e.to_string())?;
        let text = random_query(&mut rng(3000 + seed), &logical, 4, 3);
        let q = parse(&text).map_err(|e| format!("{text}: {e}"))?;
        let fast = evaluate(&c, &q, &EvalOptions::default());
        let slow = brute_force_evaluate(&c, &q);
        ensure(fast == slow, || format!("seed {seed}: {text}"))?;
        matched += fast.map_or(0, |r| (r.total() > 0) as usize);
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:.1?}"))?;
    Ok(format!("500 pairs agree, {matched} with matches ({took:.1?})"))
}

fn load_ratio() -> Outcome {
    let big = common::scaled_corpus(520_000);
    ensure(big.slots.len() >= 500_000 && big.nodes.len() >= 1_000_000, || "corpus too small".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let header = write_graf(&big, dir.path().join("graf")).map_err(|e| e.to_string())?;
    drop(big);
    let t = Instant::now();
    let ingested = parse_graf(&header).map_err(|e| e.to_string())?;
    let ingest = t.elapsed();
    let image = dir.path().join("big.fab");
    compile(&ingested, &image).map_err(|e| e.to_string())?;
    let nodes = ingested.nodes.len();
    drop(ingested);
    let t = Instant::now();
    let c = Corpus::load(&image).map_err(|e| e.to_string())?;
    let load = t.elapsed();
    ensure(c.node_count() == nodes, || "node count changed".into())?;
    let ratio = ingest.as_secs_f64() / load.as_secs_f64();
    let detail = format!("{nodes} nodes: XML ingest {ingest:.2?}, image load {load:.2?}, ratio {ratio:.1}");
    ensure(ratio >= 10.0, || detail.clone())?;
    Ok(detail)
}

fn order_laws() -> Outcome {
    let r = order_ranking();
    let mut g = rng(4000);
    let mut embedder_cases = 0;
    for i in 0..10_000 {
        let (a, b, c) = (random_node(&mut g), random_node(&mut g), random_node(&mut g));
        let cmp = |x, y| canonical_compare(x, y, &r);
        ensure(cmp(&a, &a) == Ordering::Equal, || format!("case {i}: irreflexivity"))?;
        ensure(cmp(&b, &a) == cmp(&a, &b).reverse(), || format!("case {i}: antisymmetry"))?;
        if cmp(&a, &b) != Ordering::Greater && cmp(&b, &c) != Ordering::Greater {
            ensure(cmp(&a, &c) != Ordering::Greater, || format!("case {i}: transitivity"))?;
        }
        let distinct_end = a.monads.first() != b.monads.first() || a.monads.last() != b.monads.last();
        if b.monads.is_subset_of(&a.monads) && distinct_end {
            embedder_cases += 1;
            ensure(cmp(&a, &b) == Ordering::Less, || format!("case {i}: embedder first"))?;
        }
    }
    Ok(format!("10000 triples, {embedder_cases} embedding pairs"))
}

fn toy4_golden() -> Outcome {
    let bad = golden::mismatches();
    let names: Vec<String> = bad.into_iter().map(|(n, _, _)| n).collect();
    ensure(names.is_empty(), || format!("differ: {}", names.join(", ")))?;
    Ok(format!("{} expected files match", golden::FILES.len()))
}

fn snapshots() -> Outcome {
    let mut saved = 0;
    let mut nonempty = 0;
    let mut seed = 5000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    while saved < 50 {
        seed += 1;
        let logical = random_corpus(&mut rng(seed), Shape::ORACLE);
        let c = Corpus::from_logical(&logical).map_err(|e| e.to_string())?;
        let passage = c.otypes().iter().find(|o| o.as_str() != "word").cloned();
        let Some(passage) = passage else { continue };
        let mut store = AnnotationStore::new(c.fingerprint());
        for k in 0..3 {
            if saved == 50 {
                break;
            }
            let text = random_query(&mut rng(seed * 10 + k), &logical, 3, 2);
            let meta = QueryMeta {
                passage_otype: passage.clone(),
                is_public: k % 2 == 0,
                ..QueryMeta::new(format!("q{k}"), ["ann", "bob"][k as usize % 2])
            };
            let q = store.save_query(&c, meta, &text).map_err(|e| format!("{text}: {e}"))?.clone();
            saved += 1;
            nonempty += (!q.snapshot.is_empty()) as usize;
            // re-evaluate on a freshly loaded image of the same corpus
            let (bytes, _) = compile_to_bytes(&logical).map_err(|e| e.to_string())?;
            let again = Corpus::from_bytes(&bytes).map_err(|e| e.to_string())?;
            let (entries, total) = snapshot(&again, &text, &passage).map_err(|e| e.to_string())?;
            ensure(entries == q.snapshot && total == q.total_matches, || format!("seed {seed}: {text}"))?;
            ensure(q.total_verses == entries.len() as u64, || format!("seed {seed}: verse count"))?;
        }
        let a = dir.path().join(format!("{seed}-a.json"));
        let b = dir.path().join(format!("{seed}-b.json"));
        export_store(&store, &a).map_err(|e| e.to_string())?;
        let (back, warnings) = import_store(&a, &c).map_err(|e| e.to_string())?;
        ensure(warnings.is_empty(), || format!("seed {seed}: unexpected warnings"))?;
        export_store(&back, &b).map_err(|e| e.to_string())?;
        let same = std::fs::read(&a).map_err(|e| e.to_string())? == std::fs::read(&b).map_err(|e| e.to_string())?;
        ensure(same, || format!("seed {seed}: export differs after import"))?;
    }
    Ok(format!("{saved} saved queries ({nonempty} with hits) reproduce; stores round-trip byte-identically"))
}

fn pagination() -> Outcome {
    let nav = paginate(12_835, 1, 25).map_err(|e| e.to_string())?;
    let last = paginate(12_835, nav.total_pages, 25).map_err(|e| e.to_string())?;
    ensure(nav.total_pages == 514 && last.range.len() == 10, || {
        format!("{} pages, last {}", nav.total_pages, last.range.len())
    })?;
    let mut g = rng(6000);
    for _ in 0..2000 {
        let total = g.gen_range(0..3000);
        let size = g.gen_range(1..60);
        let first = paginate(total, 1, size).map_err(|e| e.to_string())?;
        let mut covered = 0;
        for p in 1..=first.total_pages {
            let nav = paginate(total, p, size).map_err(|e| e.to_string())?;
            ensure(nav.range.start == covered, || format!("{total}/{size}: gap before page {p}"))?;
            let full = p < first.total_pages;
            ensure(!nav.range.is_empty() && (!full || nav.range.len() == size), || {
                format!("{total}/{size}: page {p} has {} items", nav.range.len())
            })?;
            covered = nav.range.end;
        }
        ensure(covered == total, || format!("{total}/{size}: pages cover {covered}"))?;
        ensure(first.total_pages == total.div_ceil(size), || format!("{total}/{size}: page count"))?;
    }
    Ok("12835 verses / 25 = 514 pages, last page 10; 2000 random partitions".into())
}

fn etcbc() -> Outcome {
    let Some(path) = std::env::var_os("FABRIC_ETCBC") else {
        return Ok("skipped: FABRIC_ETCBC not set (ETCBC data not supplied)".into());
    };
    let path = Path::new(&path);
    let (c, assignments) = if path.extension().is_some_and(|e| e == "fab") {
        let c = Corpus::load(path).map_err(|e| e.to_string())?;
        let n = c.to_logical().features.len() as u64;
        (c, n)
    } else {
        let logical = parse_graf(path).map_err(|e| e.to_string())?;
        let n = logical.features.len() as u64;
        (Corpus::from_logical(&logical).map_err(|e| e.to_string())?, n)
    };
    let s = c.stats();
    ensure(s.words == 426_555 && s.nodes == 945_726, || {
        format!("words {} nodes {}", s.words, s.nodes)
    })?;
    ensure(s.features == assignments, || format!("features {} vs {assignments} stored", s.features))?;
    if std::env::var_os("FABRIC_ETCBC_PAPER_EDITION").is_some() {
        ensure(s.features == 25_504_388, || format!("features {}", s.features))?;
    }
    Ok(format!("words {}, nodes {}, features {}", s.words, s.nodes, s.features))
}

fn main() {
    let criteria: [Check; 8] = [
        ("round-trip identity", round_trips),
        ("oracle equivalence", oracle_pairs),
        ("load speed ratio", load_ratio),
        ("canonical order laws", order_laws),
        ("TOY4 golden suite", toy4_golden),
        ("snapshot soundness", snapshots),
        ("pagination arithmetic", pagination),
        ("ETCBC quantities", etcbc),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
