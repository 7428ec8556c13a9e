//! Translation lengths against brute-force minimization of `d(x, w·x)` over
//! the vertices of a ball in the Bass–Serre tree.

mod common;

use common::BassSerreBall;
use freeprod::catalog;
use freeprod::corpus::{generate_corpus, CorpusSpec};
use freeprod::rational::{q, qi};
use freeprod::trees::{probe_words, MarkedGraphOfGroups};
use freeprod::words::{FactorModel, FactorSpec};

fn compare(t: &MarkedGraphOfGroups, radius: usize, syllables: usize, cap: usize) {
    let ball = BassSerreBall::new(t, radius).expect("finite vertex groups");
    for w in probe_words(&t.spec, syllables, cap) {
        let brute = ball.min_displacement(&w).unwrap_or_else(|| panic!("{w} leaves the ball"));
        assert_eq!(t.translation_length(&w), brute, "{w} on a ball of {} vertices", ball.len());
    }
}

#[test]
fn standard_rose_examples() {
    let spec = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 3 }]).unwrap();
    let t = catalog::standard_rose(&spec, qi(1), qi(1));
    let ball = BassSerreBall::new(&t, 6).unwrap();
    assert_eq!(ball.min_displacement(&spec.x(1, 1)), Some(qi(1)));
    let ax = spec.mul(&spec.p(1, 1), &spec.x(1, 1));
    assert_eq!(ball.min_displacement(&ax), Some(qi(3)));
    assert_eq!(t.translation_length(&ax), qi(3));
    compare(&t, 6, 3, 60);
}

#[test]
fn roses_and_barbells() {
    let f2 = FactorSpec::free(2);
    compare(&catalog::rose(&f2), 6, 3, 60);
    compare(&catalog::barbell(q(1, 10)), 7, 3, 60);
    compare(&catalog::unit_theta(), 7, 3, 60);
    let mixed = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::FiniteCyclic { order: 3 }]).unwrap();
    compare(&catalog::standard_rose(&mixed, q(1, 2), q(2, 3)), 6, 3, 60);
}

#[test]
fn corpus_trees_with_finite_vertex_groups() {
    let specs = [
        FactorSpec::free(2),
        FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap(),
        FactorSpec::new(0, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::FiniteCyclic { order: 3 }]).unwrap(),
    ];
    let mut checked = 0;
    for (i, spec) in specs.into_iter().enumerate() {
        let c = generate_corpus(&CorpusSpec { spec: spec.clone(), max_edges: None, seed: 40 + i as u64, count: 12 }).unwrap();
        for t in c.trees.iter().filter(|t| t.vertices.iter().all(|v| v.order(&t.spec).is_some())) {
            compare(t, 6, 2, 30);
            checked += 1;
        }
    }
    assert!(checked >= 5, "only {checked} corpus trees had finite vertex groups");
}
