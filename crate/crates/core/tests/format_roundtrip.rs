mod support;

use std::collections::BTreeSet;

use mwekit_core::cupt::{read_cupt_str, to_cupt_string};
use mwekit_core::llm::{parse_llm_output, to_llm_output};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn read_after_write_is_identity(c in support::arb_corpus(10, 12)) {
        let text = to_cupt_string(&c);
        let back = read_cupt_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(to_cupt_string(&back), text);
    }

    #[test]
    fn llm_gold_round_trip(s in support::arb_sentence("x".into(), 12)) {
        let out = to_llm_output(&s);
        let parsed = parse_llm_output(&out, &s);
        prop_assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        let want: BTreeSet<Vec<usize>> = s.mwes().iter().map(|m| m.token_indices().to_vec()).collect();
        let got: BTreeSet<Vec<usize>> = parsed.instances.iter().map(|m| m.token_indices().to_vec()).collect();
        prop_assert_eq!(got.len(), parsed.instances.len());
        prop_assert_eq!(got, want);
    }
}
