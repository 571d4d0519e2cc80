//! Additive parametrization: the reduction to a plain ITA and the region
//! procedure answer existential reachability alike.

mod common;

use common::{backend, random_model, GenSpec};
use itava::analysis::{existential_reach, is_additive, reduce_additive, Answer};
use itava::model::validate;
use itava::regions::Backend;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn spec() -> GenSpec {
    GenSpec {
        max_levels: 2,
        max_aux: 1,
        max_states: 4,
        max_trans: 4,
        params: 2,
    }
}

#[test]
fn reduction_agrees_with_regions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut answers = Vec::new();
    for m in 0..25 {
        let (src, a) = random_model(&mut rng, &spec());
        assert!(is_additive(&a));
        let targets = a.accepting_states();
        let red = reduce_additive(&a, None).unwrap();
        assert!(validate(&red.automaton).is_valid());
        let via_ita =
            existential_reach(&red.automaton, &targets, None, &mut Backend::builtin(&[])).unwrap();
        let via_regions = existential_reach(&a, &targets, None, &mut backend(&a)).unwrap();
        assert_ne!(via_regions.answer, Answer::Unknown, "model {m}:\n{src}");
        assert_eq!(via_ita.answer, via_regions.answer, "model {m}:\n{src}");
        answers.push(via_ita.answer);
    }
    assert!(
        answers.contains(&Answer::Yes) && answers.contains(&Answer::No),
        "{answers:?}"
    );
}
