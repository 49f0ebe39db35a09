mod common;

use amrfoil::transforms::{ManipulationType, TransformConfig, Transformer};
use proptest::prelude::*;

use common::{check_manipulation, mini_wordnet, seeded_graph};

fn wordnet() -> &'static amrfoil::wordnet::WordnetDb {
    static DB: std::sync::OnceLock<amrfoil::wordnet::WordnetDb> = std::sync::OnceLock::new();
    DB.get_or_init(mini_wordnet)
}

#[test]
fn every_manipulation_applies_somewhere() {
    let config = TransformConfig::default();
    let t = Transformer::new(&config, Some(wordnet()));
    for kind in ManipulationType::ALL {
        let applied = (0..300u64).filter(|s| check_manipulation(&t, &seeded_graph(*s), kind, *s).unwrap()).count();
        assert!(applied > 30, "{kind} applied only {applied} times");
    }
}

#[test]
fn relabels_need_wordnet() {
    let config = TransformConfig::default();
    let t = Transformer::new(&config, None);
    let g = amrfoil::penman::parse("(h / happy-01 :ARG1 (i / i))").unwrap();
    for kind in [ManipulationType::AR, ManipulationType::HS] {
        assert!(!check_manipulation(&t, &g, kind, 0).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn manipulation_deltas_hold(graph_seed in any::<u64>(), seed in any::<u64>()) {
        let config = TransformConfig::default();
        let t = Transformer::new(&config, Some(wordnet()));
        let g = seeded_graph(graph_seed);
        for kind in ManipulationType::ALL {
            if let Err(e) = check_manipulation(&t, &g, kind, seed) {
                prop_assert!(false, "{}", e);
            }
        }
    }

    #[test]
    fn random_choice_respects_allowed(graph_seed in any::<u64>(), seed in any::<u64>(), mask in 1u8..32) {
        let config = TransformConfig::default();
        let t = Transformer::new(&config, Some(wordnet()));
        let allowed: std::collections::BTreeSet<_> =
            ManipulationType::ALL.into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, k)| k).collect();
        let g = seeded_graph(graph_seed);
        if let Ok((out, applied)) = t.apply_random(&g, seed, &allowed) {
            prop_assert!(allowed.contains(&applied.kind));
            prop_assert_ne!(&out, &g);
            prop_assert_eq!(t.apply_random(&g, seed, &allowed).unwrap().0, out);
        }
    }
}
