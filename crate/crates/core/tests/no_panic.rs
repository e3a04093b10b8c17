mod support;

use mwekit_core::cupt::{read_cupt_str, read_cupt_with, ColumnLayout, ReadOptions};
use mwekit_core::lexicon::load_lexicon_str;
use mwekit_core::llm::parse_llm_output;
use proptest::prelude::*;

fn cuptish() -> impl Strategy<Value = String> {
    let line = prop_oneof![
        Just("# sent_id = a".to_string()),
        Just("# flag = unclear".to_string()),
        Just("# mwe_source = 1:predicted".to_string()),
        Just(String::new()),
        "[0-9]{1,2}\t[a-z_]{1,3}\t[a-z_]{1,3}\t(NOUN|VERB|_|XX)\t[0-9_]{1,2}\t[a-z_]{1,3}\t[0-9*_:;A-Z]{1,6}",
        "[^\n]{0,30}",
    ];
    prop::collection::vec(line, 0..12).prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cupt_reader_never_panics(text in cuptish()) {
        let _ = read_cupt_str(&text);
        let opts = ReadOptions { layout: ColumnLayout::Cupt11, ..ReadOptions::default() };
        let _ = read_cupt_with(text.as_bytes(), &opts);
    }

    #[test]
    fn lexicon_loader_never_panics(text in "[^\u{0}]{0,60}") {
        let _ = load_lexicon_str(&text);
    }

    #[test]
    fn llm_parser_never_panics(s in support::arb_sentence("x".into(), 8), text in "[a-z\t0-9;:\n ]{0,80}") {
        let out = parse_llm_output(&text, &s);
        for m in &out.instances {
            prop_assert!(m.last() <= s.len());
        }
    }
}
