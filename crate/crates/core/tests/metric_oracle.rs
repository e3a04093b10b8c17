mod support;

use mwekit_core::eval::{evaluate, iaa, recall_breakdown, score, EvalOptions, Partition};
use mwekit_core::lexicon::load_lexicon_str;
use proptest::prelude::*;
use support::{arb_gold_pred, oracle_prf, set_oracle};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn score_matches_set_oracle((gold, pred) in arb_gold_pred(10, 12)) {
        let r = score(&gold, &pred).unwrap();
        let o = set_oracle(&gold, &pred);
        prop_assert_eq!((r.gold, r.pred, r.correct), (o.gold, o.pred, o.correct));
        prop_assert_eq!((r.precision, r.recall, r.f1), oracle_prf(&o));
        prop_assert!((0.0..=1.0).contains(&r.precision) && (0.0..=1.0).contains(&r.recall));
    }

    #[test]
    fn partitions_recompose_recall((gold, pred) in arb_gold_pred(10, 12)) {
        let lex = load_lexicon_str("give_try\npick_up\nthe_it\n").unwrap();
        let train = gold.clone();
        let overall = score(&gold, &pred).unwrap();
        for p in [Partition::Type, Partition::Continuity, Partition::InLexicon(&lex), Partition::Seen(&train)] {
            let b = match recall_breakdown(&gold, &pred, p) {
                Ok(b) => b,
                // random tokens may lack lemmas
                Err(mwekit_core::eval::EvalError::MissingLemma(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let g: usize = b.iter().map(|c| c.gold).sum();
            prop_assert_eq!(g, overall.gold);
            if g > 0 {
                let recomposed: f64 = b.iter().filter_map(|c| c.recall.map(|r| r * c.gold as f64)).sum::<f64>() / g as f64;
                prop_assert!((recomposed - overall.recall).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_and_symmetry((gold, pred) in arb_gold_pred(6, 10)) {
        let same = score(&gold, &gold).unwrap();
        prop_assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        let ab = score(&gold, &pred).unwrap().f1;
        let ba = score(&pred, &gold).unwrap().f1;
        prop_assert!((ab - ba).abs() < 1e-15);
        let r = iaa(&[gold.clone(), pred.clone()]).unwrap();
        prop_assert_eq!(r.pairwise_f1[0][1], r.pairwise_f1[1][0]);
    }
}

#[test]
fn three_annotators_max_over_pairs() {
    use mwekit_core::model::{Corpus, MweInstance, MweSource, Sentence, Token};
    let make = |spans: &[&[usize]]| {
        let toks = (1..=8).map(|i| Token::new(i, "w")).collect();
        let ms = spans.iter().map(|ix| MweInstance::new(ix.to_vec(), MweSource::Gold).unwrap()).collect();
        Corpus::new(vec![Sentence::new("1", toks).unwrap().with_mwes(ms).unwrap()]).unwrap()
    };
    let a = make(&[&[1, 2], &[3, 4]]);
    let b = make(&[&[1, 2]]);
    let c = make(&[&[5, 6]]);
    let r = iaa(&[a.clone(), b.clone(), c.clone()]).unwrap();
    let pairs = [score(&a, &b).unwrap().f1, score(&a, &c).unwrap().f1, score(&b, &c).unwrap().f1];
    let max = pairs.iter().copied().fold(0.0, f64::max);
    assert_eq!(r.max, max);
    assert!((r.mean - pairs.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    let _ = evaluate(&a, &b, EvalOptions::default()).unwrap();
}
