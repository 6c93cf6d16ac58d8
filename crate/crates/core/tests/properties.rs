mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_scenarios_satisfy_invariants(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 8);
        let result = common::random_literal(&mut rng, &s.agent.model);
        if let Err(e) = common::props::check_scenario(&s, &result, &mut rng) {
            prop_assert!(false, "seed {}: {}", seed, e);
        }
    }

    #[test]
    fn random_scenarios_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 8);
        let text = intent_core::scenario::serialize(&s);
        let back = intent_core::scenario::parse(&text);
        prop_assert!(back.is_ok(), "{:?}\n{}", back.err(), text);
        prop_assert_eq!(back.unwrap(), s);
    }
}
