mod common;

use amrfoil::penman::{self, parse, parse_corpus, serialize, ParseOptions, PenmanError};
use proptest::prelude::*;

use common::{handwritten_corpus, seeded_graph};

#[test]
fn handwritten_corpus_round_trips() {
    let corpus = handwritten_corpus();
    assert!(corpus.len() >= 20);
    for text in &corpus {
        let g = parse(text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let again = parse(&serialize(&g)).unwrap();
        assert_eq!(again.triple_set(), g.triple_set(), "{text}");
        assert_eq!(serialize(&again), serialize(&g));
    }
}

#[test]
fn corpus_parses_as_one_file() {
    let text = std::fs::read_to_string(common::fixture("corpus.amr")).unwrap();
    let graphs = parse_corpus(&text, &ParseOptions::default()).unwrap();
    assert_eq!(graphs.len(), handwritten_corpus().len());
    let stripped = parse_corpus(&text, &ParseOptions { strip_wiki: true }).unwrap();
    assert!(stripped.iter().all(|g| g.attributes().iter().all(|a| a.role.as_str() != ":wiki")));
}

#[test]
fn errors_carry_positions() {
    match parse("(a / alpha\n  :ARG0 (b / beta") {
        Err(PenmanError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("(a / x :ARG0 (a / y))"), Err(PenmanError::DuplicateVariable { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn generated_graphs_round_trip(seed in any::<u64>()) {
        let g = seeded_graph(seed);
        let text = serialize(&g);
        let back = penman::parse(&text).unwrap();
        prop_assert_eq!(back.triple_set(), g.triple_set());
        prop_assert_eq!(&back, &g);
    }

    #[test]
    fn damaged_input_never_panics(seed in any::<u64>(), cut in any::<prop::sample::Index>(), byte in prop::sample::select(vec!["(", ")", "/", ":", "\"", " ", ""])) {
        let text = serialize(&seeded_graph(seed));
        let at = cut.index(text.len());
        let at = (0..=at).rev().find(|i| text.is_char_boundary(*i)).unwrap();
        let mut damaged = text.clone();
        damaged.replace_range(at..(at + 1).min(text.len()), byte);
        let _ = parse(&damaged);
        let _ = parse_corpus(&damaged, &ParseOptions::default());
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[()/: a-z0-9\"\\-]{0,80}") {
        let _ = parse(&text);
    }
}
