mod support;

use std::collections::BTreeSet;

use mwekit_core::identify::{identify, identify_corpus, MatchConfig, OverlapPolicy};
use mwekit_core::lexicon::{Lexicon, MatchKey};
use mwekit_core::model::Corpus;
use proptest::prelude::*;
use support::{arb_lemmatized, arb_lexicon, brute_force_matches, lemma_sentence};

fn spans(v: &[mwekit_core::MweInstance]) -> BTreeSet<Vec<usize>> {
    v.iter().map(|m| m.token_indices().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn equals_brute_force(lemmas in arb_lemmatized(10), lex in arb_lexicon(), gap in 0usize..4, reorder in any::<bool>()) {
        let s = lemma_sentence("s", &lemmas);
        let cfg = MatchConfig { max_gap: gap, allow_reorder: reorder, overlap_policy: OverlapPolicy::All };
        let got = identify(&s, &lex, &cfg).unwrap();
        let folded: Vec<String> = lemmas.iter().map(|l| l.to_lowercase()).collect();
        prop_assert_eq!(spans(&got), brute_force_matches(&folded, &lex, gap, reorder));
        let firsts: Vec<usize> = got.iter().map(|m| m.first()).collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sound(lemmas in arb_lemmatized(12), lex in arb_lexicon(), reorder in any::<bool>(), longest in any::<bool>()) {
        let s = lemma_sentence("s", &lemmas);
        let cfg = MatchConfig {
            max_gap: 3,
            allow_reorder: reorder,
            overlap_policy: if longest { OverlapPolicy::LongestNonOverlapping } else { OverlapPolicy::All },
        };
        let got = identify(&s, &lex, &cfg).unwrap();
        let key = if reorder { MatchKey::Multiset } else { MatchKey::Sequence };
        for m in &got {
            prop_assert!(lex.contains(&s.lemma_sequence(m).unwrap(), key));
            prop_assert!(m.last() - m.first() + 1 - m.len() <= cfg.max_gap);
        }
        if longest {
            let mut used = BTreeSet::new();
            for m in &got {
                for &i in m.token_indices() {
                    prop_assert!(used.insert(i));
                }
            }
        }
    }

    #[test]
    fn monotone_in_lexicon(lemmas in arb_lemmatized(10), a in arb_lexicon(), b in arb_lexicon()) {
        let s = lemma_sentence("s", &lemmas);
        let cfg = MatchConfig::default();
        let small = spans(&identify(&s, &a, &cfg).unwrap());
        let union = Lexicon::from_entries(a.entries().iter().chain(b.entries()).cloned());
        let big = spans(&identify(&s, &union, &cfg).unwrap());
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn corpus_level(sents in prop::collection::vec(arb_lemmatized(8), 0..6), lex in arb_lexicon()) {
        let c = Corpus::new(
            sents.iter().enumerate().map(|(i, l)| lemma_sentence(&format!("s{i}"), l)).collect()
        ).unwrap();
        let cfg = MatchConfig::default();
        let out = identify_corpus(&c, &lex, &cfg).unwrap();
        let again = identify_corpus(&c, &lex, &cfg).unwrap();
        prop_assert_eq!(&out, &again);
        let ids: Vec<&str> = out.sentences().iter().map(|s| s.id()).collect();
        let want: Vec<&str> = c.sentences().iter().map(|s| s.id()).collect();
        prop_assert_eq!(ids, want);
        let total: usize = c.sentences().iter().map(|s| identify(s, &lex, &cfg).unwrap().len()).sum();
        prop_assert_eq!(out.mwe_count(), total);
    }
}

#[test]
fn pick_me_up() {
    let lemmas: Vec<String> = ["pick", "I", "up", "at", "the", "station"].iter().map(|s| s.to_string()).collect();
    let s = lemma_sentence("s", &lemmas);
    let lex = mwekit_core::lexicon::load_lexicon_str("pick_up\n").unwrap();
    let got = identify(&s, &lex, &MatchConfig::default()).unwrap();
    assert_eq!(spans(&got), BTreeSet::from([vec![1, 3]]));
    assert!(got[0].is_discontinuous());
}

#[test]
fn missing_lemmas_are_aggregated() {
    use mwekit_core::model::{Sentence, Token};
    let bare = |id: &str| Sentence::new(id, vec![Token::new(1, "a"), Token::new(2, "b")]).unwrap();
    let c = Corpus::new(vec![bare("1"), lemma_sentence("2", &["a".into(), "b".into()]), bare("3")]).unwrap();
    let lex = mwekit_core::lexicon::load_lexicon_str("a_b\n").unwrap();
    let err = identify_corpus(&c, &lex, &MatchConfig::default()).unwrap_err();
    assert_eq!(err.0.len(), 2);
}
