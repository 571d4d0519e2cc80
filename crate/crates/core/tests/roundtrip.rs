//! Printing a model and reading it back gives the same automaton.

mod common;

use common::{random_source, GenSpec};
use itava::frontend::{parse_model, print_model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>(), params in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = GenSpec { params, ..GenSpec::default() };
        let a = parse_model(&random_source(&mut rng, &spec)).unwrap().automaton;
        let text = print_model(&a);
        let b = parse_model(&text).unwrap().automaton;
        prop_assert_eq!(&a, &b, "{}", text);
        prop_assert_eq!(print_model(&b), text);
    }
}

#[test]
fn corpus_models_round_trip() {
    for name in ["a1.pita", "a2.pita", "pinned.pita"] {
        let a = parse_model(&std::fs::read_to_string(common::data(name)).unwrap())
            .unwrap()
            .automaton;
        assert_eq!(
            parse_model(&print_model(&a)).unwrap().automaton,
            a,
            "{name}"
        );
    }
}
