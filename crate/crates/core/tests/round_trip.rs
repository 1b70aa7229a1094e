mod common;

use common::{random_corpus, rng, Shape};
use fabric::compiler::compile_to_bytes;
use fabric::ingest::{write_graf, write_tabular};
use fabric::{parse_graf, parse_tabular, validate, Corpus};

#[test]
fn generated_corpora_are_valid() {
    for seed in 0..200 {
        let c = random_corpus(&mut rng(seed), Shape::ROUND_TRIP);
        let r = validate(&c);
        assert!(r.is_ok(), "seed {seed}: {}", r.summary());
    }
}

#[test]
fn graf_and_tabular_round_trip() {
    for seed in 0..60 {
        let c = random_corpus(&mut rng(seed), Shape::ROUND_TRIP);
        let dir = tempfile::tempdir().unwrap();
        let header = write_graf(&c, dir.path().join("graf")).unwrap();
        write_tabular(&c, dir.path().join("tab")).unwrap();
        let g = parse_graf(&header).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let t = parse_tabular(dir.path().join("tab")).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(g, c, "seed {seed}: graf");
        assert_eq!(t, c, "seed {seed}: tabular");
    }
}

#[test]
fn image_round_trip_is_exact() {
    for seed in 0..60 {
        let c = random_corpus(&mut rng(seed), Shape::ROUND_TRIP);
        let (bytes, summary) = compile_to_bytes(&c).unwrap();
        assert_eq!(summary.nodes, c.nodes.len());
        let loaded = Corpus::from_bytes(&bytes).unwrap();
        assert_eq!(loaded.to_logical(), c, "seed {seed}");
        // compiling is deterministic
        assert_eq!(compile_to_bytes(&loaded.to_logical()).unwrap().0, bytes);
    }
}
