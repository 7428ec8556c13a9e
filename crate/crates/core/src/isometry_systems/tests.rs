use super::*;
use crate::catalog;
use crate::index::local_index;
use crate::rational::{q, qi};
use crate::trees::probe_words;
use crate::trees::MarkedGraphOfGroups;
use crate::words::FactorModel;

const BUDGET: usize = 5000;

#[test]
fn composite_of_rotation_pieces() {
    let sys = rotation_pair(&q(2, 5));
    let c = sys.compose_word(&[1, 1]).unwrap().unwrap();
    let d = sys.geometry().hull(&c.domain);
    assert_eq!(d.length(), q(1, 5));
    assert!(d.contains(&Point::Node(0)) && d.contains(&Point::Inner(0, q(1, 5))));
    assert_eq!(c.range, vec![Point::Inner(0, q(4, 5)), Point::Node(1)]);
    assert!(sys.compose_word(&[1, 1, 1]).unwrap().is_none());
    assert!(matches!(sys.compose_word(&[1, -1]), Err(Error::Malformed(_))));
    assert!(matches!(sys.compose_word(&[3]), Err(Error::Domain(_))));
}

#[test]
fn independence() {
    match identity_segment().independent_generators(4) {
        Independence::Violated { word, arc } => {
            assert_eq!(word.len(), 1);
            assert_eq!(arc, (Point::Node(0), Point::Node(1)));
        }
        other => panic!("{other:?}"),
    }
    // rotation by 2/5 has period 5
    match rotation_pair(&q(2, 5)).independent_generators(6) {
        Independence::Violated { word, .. } => assert_eq!(word.len(), 5),
        other => panic!("{other:?}"),
    }
    assert_eq!(rotation_pair(&q(7, 24)).independent_generators(6), Independence::IndependentUpTo(6));
}

#[test]
fn volumes() {
    let r = rotation_pair(&q(2, 5)).volume_identity();
    assert!(r.equal());
    assert_eq!(r.forest, qi(1));
    let s = single_shift().volume_identity();
    assert!(!s.equal());
    assert_eq!(s.bases, q(1, 2));
    let empty = IsometrySystem::new(MetricForest { nodes: 2, edges: vec![(0, 1, qi(1))], special: vec![] }, vec![], None)
        .unwrap()
        .volume_identity();
    assert_eq!(empty.bases, qi(0));
    assert!(!empty.equal());
}

#[test]
fn imanishi_on_rotations() {
    let r = rotation_pair(&q(7, 24)).imanishi_classify(BUDGET);
    assert!(r.all_compact());
    assert_eq!(r.closure, Some(25));
    assert_eq!(r.lattice_bound, 25.into());
    assert!(r.components.iter().all(|c| c.tag == LeafTag::Compact { certified: true }));
    // a Fibonacci ratio stands in for the golden rotation: its period is
    // beyond a small budget
    let g = rotation_pair(&q(233, 377)).imanishi_classify(100);
    assert!(g.components.iter().all(|c| c.tag == LeafTag::DenseCandidate));
    assert_eq!(g.lattice_bound, 378.into());
    assert!(rotation_pair(&q(233, 377)).imanishi_classify(400).all_compact());
}

#[test]
fn dual_tree_refusals() {
    let r = rotation_pair(&q(233, 377));
    assert!(matches!(dual_tree(&r, 100), Err(Error::Refused(_))));
    assert!(matches!(dual_tree(&rotation_pair(&q(7, 24)), BUDGET), Err(Error::Precondition(_))));
    let t = catalog::rose(&FactorSpec::free(2));
    let mut unmarked = suspend(&t, &fundamental_subtree(&t)).unwrap().system;
    unmarked.marking = None;
    assert!(matches!(dual_tree(&unmarked, BUDGET), Err(Error::Precondition(_))));
}

#[test]
fn rose_suspension_indices() {
    let t = catalog::rose(&FactorSpec::free(2));
    let s = suspend(&t, &fundamental_subtree(&t)).unwrap();
    assert_eq!(s.system.isometries.len(), 2);
    let v = s.vertex_nodes[0].unwrap();
    assert_eq!(s.system.leaf_index(&Point::Node(v), BUDGET).unwrap().index, 2);
    let mid = s.system.forest.at(0, q(1, 2));
    assert_eq!(s.system.leaf_index(&mid, BUDGET).unwrap().index, 0);
}

#[test]
fn standard_rose_with_a_factor() {
    let spec = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap();
    let t = catalog::rose(&spec);
    let s = suspend(&t, &fundamental_subtree(&t)).unwrap();
    // one free isometry and one peripheral piece
    assert_eq!(s.system.isometries.len(), 2);
    let sys = &s.system;
    let v = s.vertex_nodes[0].unwrap();
    let w = s.vertex_nodes[1].unwrap();
    assert_eq!(sys.leaf_index(&Point::Node(w), BUDGET).unwrap().index, 1);
    assert_eq!(sys.leaf_index(&Point::Node(v), BUDGET).unwrap().index, 1);
    assert_eq!(sys.leaf_index(&Point::Node(v), BUDGET).unwrap().index, local_index(&t, 0));
}

fn round_trip(t: &MarkedGraphOfGroups) {
    let s = suspend(t, &fundamental_subtree(t)).unwrap();
    let d = dual_tree(&s.system, BUDGET).unwrap();
    let words = probe_words(&t.spec, 3, 30);
    assert_eq!(d.tree.length_spectrum(&words), t.length_spectrum(&words), "{}", d.tree.to_json());
    for (v, node) in s.vertex_nodes.iter().enumerate() {
        let i = s.system.leaf_index(&Point::Node(node.unwrap()), BUDGET).unwrap().index;
        assert_eq!(i, local_index(t, v), "vertex {v}");
    }
}

#[test]
fn dual_tree_round_trips() {
    round_trip(&catalog::rose(&FactorSpec::free(2)));
    round_trip(&catalog::barbell(q(1, 3)));
    round_trip(&catalog::rose(&FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap()));
    round_trip(&catalog::edge_of_groups());
    round_trip(&catalog::peripheral_edge());
    round_trip(&catalog::hnn());
    round_trip(&catalog::amalgam());
    round_trip(&catalog::chain_instance());
    round_trip(&catalog::mixed_trivial_arc());
}

#[test]
fn suspension_preconditions() {
    let t = catalog::rose(&FactorSpec::free(2));
    let base = TreePoint { vertex: 0, elem: Word::identity() };
    match suspend(&t, &[base.clone()]) {
        Err(Error::Precondition(m)) => assert!(m.contains("x_1"), "{m}"),
        other => panic!("{other:?}"),
    }
    let far = TreePoint { vertex: 0, elem: t.spec.x(1, 2) };
    match suspend(&t, &[base.clone(), far]) {
        Err(Error::Precondition(m)) => assert!(m.contains("connected"), "{m}"),
        other => panic!("{other:?}"),
    }
    let spec = FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap();
    let r = catalog::rose(&spec);
    let k = vec![base.clone(), TreePoint { vertex: 0, elem: spec.x(1, 1) }];
    match suspend(&r, &k) {
        Err(Error::Precondition(m)) => assert!(m.contains("G_1"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn json_round_trip() {
    let t = catalog::rose(&FactorSpec::new(1, vec![FactorModel::FiniteCyclic { order: 2 }]).unwrap());
    let s = suspend(&t, &fundamental_subtree(&t)).unwrap().system;
    let back = IsometrySystem::from_json(&s.to_json()).unwrap();
    assert_eq!(back.to_json(), s.to_json());
    let r = rotation_pair(&q(2, 5));
    assert_eq!(IsometrySystem::from_json(&r.to_json()).unwrap().to_json(), r.to_json());
    let mut bad = r.to_json();
    bad["isometries"][0]["range"][1] = json!({"edge": 0, "at": "1/2"});
    assert!(matches!(IsometrySystem::from_json(&bad), Err(Error::Malformed(_))));
}

#[test]
fn single_letter_and_compact_examples() {
    let sys = rotation_pair(&q(2, 5));
    let c = sys.compose_word(&[2]).unwrap().unwrap();
    assert_eq!(c.domain, sys.isometries[1].domain);
    assert_eq!(c.range, sys.isometries[1].range);
    let c = sys.compose_word(&[-1]).unwrap().unwrap();
    assert_eq!(c.domain, sys.isometries[0].range);

    // two disjoint shifts on a segment of length 4, each of order two
    let f = MetricForest { nodes: 2, edges: vec![(0, 1, qi(4))], special: vec![] };
    let p = |t: i64| f.at(0, qi(t));
    let shifts = vec![
        PartialIsometry::new(vec![p(0), p(1)], vec![p(1), p(2)]),
        PartialIsometry::new(vec![p(3), p(4)], vec![p(2), p(3)]),
    ];
    let sys = IsometrySystem::new(f.clone(), shifts, None).unwrap();
    assert!(sys.imanishi_classify(100).all_compact());
    let bare = IsometrySystem::new(f, vec![], None).unwrap();
    let r = bare.imanishi_classify(1);
    assert_eq!(r.components.len(), 1);
    assert!(r.all_compact());
}

#[test]
fn suspended_trivial_arc_systems_have_independent_generators() {
    for t in [catalog::rose(&FactorSpec::free(2)), catalog::barbell(q(1, 2)), catalog::edge_of_groups()] {
        let s = suspend(&t, &fundamental_subtree(&t)).unwrap();
        assert_eq!(s.system.independent_generators(4), Independence::IndependentUpTo(4));
    }
    // an edge group fixes an arc of K
    let s = suspend(&catalog::hnn(), &fundamental_subtree(&catalog::hnn())).unwrap();
    assert!(matches!(s.system.independent_generators(2), Independence::Violated { .. }));
}
