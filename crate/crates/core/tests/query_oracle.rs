mod common;

use common::{random_corpus, random_query, rng, Shape};
use fabric::model::{adjacent, embeds, sequence_before, Node};
use fabric::mql::{Atom, Block, BlockString, Expr, Gap, Op, Operand, Pos};
use fabric::mql::{brute_force_evaluate, evaluate, parse, EvalOptions, MatchTree, Query};
use fabric::{Corpus, NodeId};

fn corpus(seed: u64) -> Corpus {
    Corpus::from_logical(&random_corpus(&mut rng(seed), Shape::ORACLE)).unwrap()
}

#[test]
fn evaluator_agrees_with_oracle() {
    let mut nonempty = 0;
    for seed in 0..300 {
        let c = corpus(seed);
        let logical = c.to_logical();
        let text = random_query(&mut rng(seed ^ 0x5eed), &logical, 4, 3);
        let q = parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {text}: {e}"));
        let fast = evaluate(&c, &q, &EvalOptions::default());
        let slow = brute_force_evaluate(&c, &q);
        assert_eq!(fast, slow, "seed {seed}: {text}");
        if fast.is_ok_and(|r| r.total() > 0) {
            nonempty += 1;
        }
    }
    // the generator has to produce queries that actually match something
    assert!(nonempty >= 60, "only {nonempty} queries matched");
}

fn node(c: &Corpus, id: NodeId) -> Node {
    Node {
        id,
        otype: c.otype(id).unwrap().to_string(),
        monads: c.monads(id).unwrap().to_owned(),
    }
}

fn check_string(c: &Corpus, bs: &BlockString, trees: &[MatchTree], parent: Option<&Node>) {
    assert_eq!(bs.blocks.len(), trees.len());
    let nodes: Vec<Node> = trees.iter().map(|t| node(c, t.node)).collect();
    for (i, (b, t)) in bs.blocks.iter().zip(trees).enumerate() {
        let n = &nodes[i];
        assert_eq!(n.otype, b.otype);
        if let Some(p) = parent {
            assert!(embeds(p, n), "{} does not embed {}", p.id, n.id);
        }
        if i > 0 {
            let prev = &nodes[i - 1].monads;
            assert!(sequence_before(prev, &n.monads));
            let gap = n.monads.first() - prev.last() - 1;
            match bs.gaps[i - 1] {
                Gap::Adjacent => assert!(adjacent(prev, &n.monads)),
                Gap::Any => {}
                Gap::AtMost(k) => assert!(gap <= k),
            }
        }
        if let Some(kids) = &b.children {
            check_string(c, kids, &t.children, Some(n));
        }
    }
}

#[test]
fn matches_respect_embedding_and_sequence() {
    for seed in 0..150 {
        let c = corpus(seed);
        let text = random_query(&mut rng(seed + 7), &c.to_logical(), 4, 3);
        let q = parse(&text).unwrap();
        let Ok(rs) = evaluate(&c, &q, &EvalOptions::default()) else { continue };
        for m in &rs.matches {
            check_string(&c, &q.root, &m.blocks, None);
        }
        for w in rs.matches.windows(2) {
            assert_ne!(w[0], w[1], "duplicate match for {text}");
        }
    }
}

fn first_block(q: &mut Query) -> &mut Block {
    &mut q.root.blocks[0]
}

#[test]
fn extra_constraints_only_remove_matches() {
    for seed in 0..150 {
        let c = corpus(seed);
        let logical = c.to_logical();
        let text = random_query(&mut rng(seed + 11), &logical, 4, 3);
        let q = parse(&text).unwrap();
        let Ok(base) = evaluate(&c, &q, &EvalOptions::default()) else { continue };
        let Some(key) = logical.features.first().map(|f| f.key.clone()) else { continue };
        if matches!(logical.features[0].target, fabric::Target::Edge(_)) {
            continue;
        }
        let mut narrower = q.clone();
        let atom = Expr::Atom(Atom {
            key,
            op: Op::Eq,
            operand: Operand::Str(logical.features[0].value.clone()),
            pos: Pos::default(),
        });
        let b = first_block(&mut narrower);
        b.constraint = Some(match b.constraint.take() {
            Some(e) => Expr::And(vec![e, atom]),
            None => atom,
        });
        let Ok(narrow) = evaluate(&c, &narrower, &EvalOptions::default()) else { continue };
        for m in &narrow.matches {
            assert!(base.matches.contains(m), "seed {seed}: {narrower} found a match {text} did not");
        }
    }
}

#[test]
fn looser_gaps_only_add_matches() {
    for seed in 0..150 {
        let c = corpus(seed);
        let text = random_query(&mut rng(seed + 13), &c.to_logical(), 4, 2);
        let q = parse(&text).unwrap();
        if q.root.gaps.is_empty() {
            continue;
        }
        let Ok(tight) = evaluate(&c, &q, &EvalOptions::default()) else { continue };
        let mut loose = q.clone();
        loose.root.gaps.iter_mut().for_each(|g| *g = Gap::Any);
        let wide = evaluate(&c, &loose, &EvalOptions::default()).unwrap();
        for m in &tight.matches {
            assert!(wide.matches.contains(m), "seed {seed}: {text}");
        }
    }
}

#[test]
fn limit_returns_a_prefix() {
    for seed in 0..100 {
        let c = corpus(seed);
        let text = random_query(&mut rng(seed + 17), &c.to_logical(), 3, 2);
        let q = parse(&text).unwrap();
        let Ok(all) = evaluate(&c, &q, &EvalOptions::default()) else { continue };
        for k in [0, 1, 3] {
            let opts = EvalOptions {
                max_matches: Some(k),
                ..EvalOptions::default()
            };
            let some = evaluate(&c, &q, &opts).unwrap();
            assert_eq!(some.matches[..], all.matches[..k.min(all.total())]);
            assert_eq!(some.cutoff.is_some(), all.total() > k, "seed {seed}: {text}");
        }
    }
}

#[test]
fn printing_is_a_parse_fixed_point() {
    for seed in 0..300 {
        let c = random_corpus(&mut rng(seed), Shape::ORACLE);
        let text = random_query(&mut rng(seed + 19), &c, 4, 3);
        let printed = parse(&text).unwrap().to_string();
        let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(reparsed.to_string(), printed);
    }
}
