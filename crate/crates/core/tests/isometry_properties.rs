use freeprod::isometry_systems::{rotation_pair, IsometrySystem};
use freeprod::rational::q;
use num_traits::Zero;
use proptest::prelude::*;

fn word() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(prop_oneof![Just(1i64), Just(-1), Just(2), Just(-2)], 1..8)
        .prop_filter("reduced", |w| w.windows(2).all(|p| p[0] != -p[1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Prepending letters can only shrink the domain of a composite.
    #[test]
    fn composites_shrink(p in 1i64..40, w in word()) {
        let sys = rotation_pair(&q(p, 41));
        let g = sys.geometry();
        let mut prev = None;
        for k in (0..w.len()).rev() {
            let len = match sys.compose_word(&w[k..]).unwrap() {
                Some(c) => g.hull(&c.domain).length(),
                None => num_rational::BigRational::zero(),
            };
            if let Some(p) = &prev {
                prop_assert!(&len <= p);
            }
            prev = Some(len);
        }
    }

    #[test]
    fn system_json_round_trip(p in 1i64..40) {
        let sys = rotation_pair(&q(p, 41));
        let text = serde_json::to_string(&sys.to_json()).unwrap();
        let back = IsometrySystem::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back.to_json(), sys.to_json());
    }
}
