mod common;

use freeprod::corpus::{corpus_to_json, generate_corpus, CorpusSpec};
use freeprod::index::{index_report, lattice_ranks};
use freeprod::rational::{q, Q};
use freeprod::trees::MarkedGraphOfGroups;
use proptest::prelude::*;

fn corpus(spec_ix: usize, seed: u64, count: usize) -> (CorpusSpec, Vec<MarkedGraphOfGroups>) {
    let spec = common::corpus_specs()[spec_ix].clone();
    let cs = CorpusSpec { spec, max_edges: None, seed, count };
    let trees = generate_corpus(&cs).unwrap().trees;
    (cs, trees)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_json_round_trip(ix in 0usize..12, seed in any::<u64>()) {
        let (_, trees) = corpus(ix, seed, 2);
        for t in trees {
            let text = serde_json::to_string(&t.to_json()).unwrap();
            let back = MarkedGraphOfGroups::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            prop_assert_eq!(back.to_json(), t.to_json());
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn subdividing_keeps_the_index(ix in 0usize..12, seed in any::<u64>(), num in 1i64..4) {
        let (_, trees) = corpus(ix, seed, 2);
        for t in trees {
            let before = index_report(&t).total;
            for e in 0..t.edges.len() {
                let mut s = t.clone();
                let at: Q = t.edges[e].length.clone() * q(num, 4);
                s.subdivide(e, &at).unwrap();
                prop_assert_eq!(index_report(&s).total, before);
            }
        }
    }

    #[test]
    fn lattice_containment(ix in 0usize..12, seed in any::<u64>()) {
        let (_, trees) = corpus(ix, seed, 2);
        for t in trees {
            prop_assert!(lattice_ranks(&t).containment_ok);
        }
    }
}

#[test]
fn corpus_documents_are_reproducible() {
    let (cs, trees) = corpus(4, 11, 5);
    let c = generate_corpus(&cs).unwrap();
    assert_eq!(c.trees, trees);
    let doc = corpus_to_json(&cs, &c);
    let text = serde_json::to_string(&doc).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&text).unwrap(), doc);
    assert_eq!(doc["format"], 1);
}

/// Λ = ⟨2, 1⟩ but generators and their pairwise products only reach 3ℤ;
/// `x2·x1x2x1⁻¹` supplies the missing lengths.
#[test]
fn lattice_needs_products_of_conjugates() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/subdivided_chain.json")).unwrap();
    let t = MarkedGraphOfGroups::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    let r = lattice_ranks(&t);
    assert!(r.containment_ok, "{:?}", r.relations);
}
