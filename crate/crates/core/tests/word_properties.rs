mod common;

use common::{syllables, Model, Syl};
use freeprod::words::{FactorModel, FactorSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec() -> FactorSpec {
    FactorSpec::new(2, vec![FactorModel::FiniteCyclic { order: 2 }, FactorModel::FiniteCyclic { order: 6 }, FactorModel::InfiniteCyclic])
        .unwrap()
}

fn syl() -> impl Strategy<Value = Syl> {
    prop_oneof![
        (1usize..=2, -3i64..=3).prop_map(|(j, e)| Syl::Gen(j, e)),
        (1usize..=3, -6i64..=6).prop_map(|(f, e)| Syl::Per(f, e)),
    ]
}

fn raw() -> impl Strategy<Value = Vec<Syl>> {
    prop::collection::vec(syl(), 0..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn reduction_matches_rewriting(a in raw()) {
        let s = spec();
        let m = Model::of(&s);
        let w = s.reduce(&m.letters(&a)).unwrap();
        prop_assert_eq!(syllables(&m, &w), m.reduce(&a));
        prop_assert_eq!(s.reduce(w.letters()).unwrap(), w);
    }

    #[test]
    fn group_laws(a in raw(), b in raw(), c in raw()) {
        let s = spec();
        let m = Model::of(&s);
        let (a, b, c) = [a, b, c].map(|x| s.reduce(&m.letters(&x)).unwrap()).into();
        prop_assert_eq!(s.mul(&s.mul(&a, &b), &c), s.mul(&a, &s.mul(&b, &c)));
        prop_assert!(s.mul(&a, &s.inverse(&a)).is_identity());
        prop_assert!(s.mul(&s.inverse(&a), &a).is_identity());
    }

    #[test]
    fn roots_reconstruct(a in raw(), k in 1usize..4) {
        let s = spec();
        let m = Model::of(&s);
        let w = m.power(&m.reduce(&a), k);
        prop_assume!(!w.is_empty());
        let (root, mult) = s.max_root(&s.reduce(&m.letters(&w)).unwrap()).unwrap();
        let mult: usize = mult.try_into().unwrap();
        prop_assert_eq!(m.power(&syllables(&m, &root), mult), w.clone());
        if let Some(expected) = m.root_multiplicity(&w) {
            prop_assert_eq!(mult, expected);
        }
    }

    #[test]
    fn word_json_round_trip(a in raw()) {
        let s = spec();
        let m = Model::of(&s);
        let w = s.reduce(&m.letters(&a)).unwrap();
        let j = s.word_to_json(&w);
        let text = serde_json::to_string(&j).unwrap();
        let back = s.word_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, w);
    }
}

#[test]
fn fuzz_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let failures = common::word_fuzz(&spec(), &mut rng, 2000);
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn spec_json_round_trip() {
    let s = spec();
    assert_eq!(FactorSpec::from_json(&s.to_json()).unwrap(), s);
}
