mod common;

use common::{random_corpus, rng, Shape};
use fabric::ingest::{validate, write_tabular, IngestError, IssueCode};
use fabric::model::{Edge, EdgeId, FeatureAssignment, MonadSet, NodeId, Region};
use fabric::{parse_tabular, LogicalCorpus, Target};

type Mutation = fn(&mut LogicalCorpus) -> IssueCode;

const MUTATIONS: &[(&str, Mutation)] = &[
    ("slot node dropped", |c| {
        let pos = c.nodes.iter().position(|n| n.otype == "word").unwrap();
        let id = c.nodes.remove(pos).id;
        c.features.retain(|f| f.target != Target::Node(id));
        c.edges.retain(|e| e.from != id && e.to != id);
        let edges: Vec<EdgeId> = c.edges.iter().map(|e| e.id).collect();
        c.features.retain(|f| !matches!(f.target, Target::Edge(e) if !edges.contains(&e)));
        IssueCode::SlotUncovered
    }),
    ("duplicate node id", |c| {
        let mut n = c.nodes[0].clone();
        n.otype = "phrase".into();
        c.nodes.push(n);
        IssueCode::DuplicateId
    }),
    ("monad past the last slot", |c| {
        let w = c.slots.len() as u32;
        let n = c.nodes.iter_mut().find(|n| n.otype != "word");
        match n {
            Some(n) => n.monads = MonadSet::range(1, w + 1),
            None => c.nodes.push(fabric::model::Node {
                id: NodeId(2_100_000_000),
                otype: "clause".into(),
                monads: MonadSet::range(1, w + 1),
            }),
        }
        IssueCode::MonadOutOfRange
    }),
    ("slot node with two monads", |c| {
        c.slots.push(fabric::model::Slot {
            index: c.slots.len() as u32 + 1,
            region: Region::new(c.text.len(), c.text.len() + 1),
        });
        let mut t = c.text.as_str().to_string();
        t.push('!');
        c.text = fabric::model::PrimaryText::new(t);
        let w = c.slots.len() as u32;
        let n = c.nodes.iter_mut().find(|n| n.otype == "word").unwrap();
        let m = n.monads.first();
        n.monads = MonadSet::from_monads([m, w]).unwrap();
        IssueCode::SlotNodeArity
    }),
    ("edge to nowhere", |c| {
        c.edges.push(Edge {
            id: EdgeId(99_999),
            from: c.nodes[0].id,
            to: NodeId(2_100_000_001),
            label: "dep".into(),
        });
        IssueCode::DanglingEdge
    }),
    ("containment self loop", |c| {
        let id = c.nodes[0].id;
        c.edges.push(Edge {
            id: EdgeId(99_998),
            from: id,
            to: id,
            label: "parent".into(),
        });
        IssueCode::ReservedSelfLoop
    }),
    ("feature on a missing node", |c| {
        c.features.push(FeatureAssignment {
            target: Target::Node(NodeId(2_100_000_002)),
            key: "lex".into(),
            value: "x".into(),
        });
        IssueCode::DanglingTarget
    }),
    ("feature assigned twice", |c| {
        let id = c.nodes[0].id;
        for v in ["a", "b"] {
            c.features.push(FeatureAssignment {
                target: Target::Node(id),
                key: "dup".into(),
                value: v.into(),
            });
        }
        IssueCode::DuplicateFeature
    }),
    ("region past the text", |c| {
        let last = c.slots.last_mut().unwrap();
        last.region = Region::new(last.region.start, c.text.len() + 5);
        IssueCode::RegionOutOfBounds
    }),
    ("overlapping slots", |c| {
        if c.slots.len() < 2 {
            let last = c.slots.last_mut().unwrap();
            last.region = Region::new(last.region.start, c.text.len() + 5);
            return IssueCode::RegionOutOfBounds;
        }
        let end = c.slots[1].region.end;
        c.slots[0].region = Region::new(c.slots[0].region.start, end);
        IssueCode::SlotOverlap
    }),
];

#[test]
fn every_mutation_is_reported() {
    for seed in 0..40 {
        for (name, mutate) in MUTATIONS {
            let mut c = random_corpus(&mut rng(seed), Shape::ROUND_TRIP);
            let code = mutate(&mut c);
            c.normalize();
            let r = validate(&c);
            assert!(r.has(code), "seed {seed}, {name}: expected {code}, got {}", r.summary());
            assert!(!r.is_ok(), "seed {seed}, {name}");
        }
    }
}

#[test]
fn mutated_files_are_rejected_on_ingest() {
    for (name, mutate) in MUTATIONS {
        let mut c = random_corpus(&mut rng(3), Shape::ROUND_TRIP);
        let code = mutate(&mut c);
        c.normalize();
        let dir = tempfile::tempdir().unwrap();
        write_tabular(&c, dir.path()).unwrap();
        match parse_tabular(dir.path()) {
            Err(IngestError::Invalid(r)) => assert!(r.has(code), "{name}: {}", r.summary()),
            other => panic!("{name}: expected rejection, got {other:?}"),
        }
    }
}

#[test]
fn non_integer_values_only_warn() {
    let mut c = random_corpus(&mut rng(5), Shape::ROUND_TRIP);
    c.meta.int_features = vec!["lex2".into()];
    c.features.push(FeatureAssignment {
        target: Target::Node(c.nodes[0].id),
        key: "lex2".into(),
        value: "seven".into(),
    });
    c.normalize();
    let r = validate(&c);
    assert!(r.is_ok(), "{}", r.summary());
    assert!(r.warnings.iter().any(|w| w.code == IssueCode::NonIntegerValue));
}
