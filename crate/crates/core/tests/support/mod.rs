//! Random corpus generators and brute-force oracles shared by the property
//! suites and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mwekit_core::lexicon::{Lexicon, LexiconEntry, MatchKey};
use mwekit_core::model::{Corpus, MweInstance, MweSource, MweType, Sentence, Token, Upos};
use proptest::prelude::*;

pub const SURFACES: &[&str] = &[
    "the", "The", "give", "it", "a", "try", "pick", "up", "_", "*", "naïve", "Ünïcödé", "a b", "#x", "1;2", "=",
];
pub const LEMMAS: &[&str] = &["the", "give", "it", "a", "try", "pick", "up", "Up", "for", "stand"];
pub const DEPRELS: &[&str] = &["root", "nsubj", "obj", "acl:relcl", "advmod", "fixed", "prep"];

fn arb_token(index: usize, len: usize) -> impl Strategy<Value = Token> {
    let heads: Vec<usize> = (0..=len).filter(|&h| h != index).collect();
    (
        prop::sample::select(SURFACES),
        prop::option::weighted(0.8, prop::sample::select(LEMMAS)),
        prop::option::weighted(0.7, prop::sample::select(Upos::ALL.to_vec())),
        prop::option::weighted(0.7, (prop::sample::select(heads), prop::sample::select(DEPRELS))),
    )
        .prop_map(move |(surface, lemma, upos, dep)| {
            let mut t = Token::new(index, surface);
            t.lemma = lemma.map(str::to_string);
            t.upos = upos;
            if let Some((h, r)) = dep {
                t = t.with_dep(h, r);
            }
            t
        })
}

fn arb_source() -> impl Strategy<Value = MweSource> {
    prop_oneof![
        4 => Just(MweSource::Gold),
        1 => Just(MweSource::Predicted),
        1 => prop::sample::select(vec!["ann1", "b-2"]).prop_map(|s| MweSource::Annotator(s.into())),
        1 => Just(MweSource::ConsistencyAdded),
    ]
}

fn arb_mwe(len: usize) -> impl Strategy<Value = MweInstance> {
    (
        prop::sample::subsequence((1..=len).collect::<Vec<_>>(), 2..=len.min(4)),
        prop::option::of(prop::sample::select(MweType::ALL.to_vec())),
        arb_source(),
    )
        .prop_map(|(ix, t, src)| MweInstance::new(ix, src).unwrap().with_type(t))
}

/// A sentence of 0..=max_len tokens with random, possibly overlapping MWEs.
pub fn arb_sentence(id: String, max_len: usize) -> impl Strategy<Value = Sentence> {
    (0..=max_len)
        .prop_flat_map(move |len| {
            let tokens: Vec<_> = (1..=len).map(|i| arb_token(i, len)).collect();
            let mwes = if len >= 2 {
                prop::collection::vec(arb_mwe(len), 0..5).boxed()
            } else {
                Just(Vec::new()).boxed()
            };
            (
                Just(id.clone()),
                tokens,
                mwes,
                any::<bool>(),
                prop::option::of(prop::sample::select(vec!["news", "ted", "ud x"])),
            )
        })
        .prop_map(|(id, tokens, mwes, unclear, source)| {
            let mut s = Sentence::new(id, tokens).unwrap().with_mwes(mwes).unwrap();
            if unclear {
                s = s.with_flag("unclear").unwrap();
            }
            if let Some(src) = source {
                s = s.with_metadata("source", src).unwrap();
            }
            s
        })
}

/// Up to `max_sentences` sentences with ids `s1`, `s2`, ...
pub fn arb_corpus(max_sentences: usize, max_len: usize) -> impl Strategy<Value = Corpus> {
    (0..=max_sentences)
        .prop_flat_map(move |n| {
            let sents: Vec<_> = (1..=n).map(|i| arb_sentence(format!("s{i}"), max_len)).collect();
            (sents, any::<bool>())
        })
        .prop_map(|(sents, meta)| {
            let c = Corpus::new(sents).unwrap();
            if meta {
                c.with_metadata("split", "test").unwrap()
            } else {
                c
            }
        })
}

/// The same token sequence annotated twice: gold and prediction sides get
/// independent MWE lists drawn from a small pool so they overlap often.
pub fn arb_gold_pred(max_sentences: usize, max_len: usize) -> impl Strategy<Value = (Corpus, Corpus)> {
    arb_corpus(max_sentences, max_len).prop_flat_map(|gold| {
        let preds: Vec<_> = gold
            .sentences()
            .iter()
            .map(|s| {
                let len = s.len();
                let existing: Vec<MweInstance> = s.mwes().to_vec();
                let fresh = if len >= 2 {
                    prop::collection::vec(arb_mwe(len), 0..4).boxed()
                } else {
                    Just(Vec::new()).boxed()
                };
                (prop::sample::subsequence(existing.clone(), 0..=existing.len()), fresh)
            })
            .collect();
        (Just(gold), preds)
    })
    .prop_map(|(gold, preds)| {
        let sents = gold
            .sentences()
            .iter()
            .zip(preds)
            .map(|(s, (kept, fresh))| {
                let mut all = kept;
                all.extend(fresh);
                s.clone().with_mwes(all).unwrap()
            })
            .collect();
        (gold.clone(), Corpus::new(sents).unwrap())
    })
}

/// Sentence with every token lemmatized from a small alphabet, for matching.
pub fn arb_lemmatized(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "B"]), 0..=max_len)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

pub fn arb_lexicon() -> impl Strategy<Value = Lexicon> {
    prop::collection::vec(
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 2..=4),
        0..8,
    )
    .prop_map(|entries| Lexicon::from_entries(entries.iter().filter_map(LexiconEntry::new)))
}

pub fn lemma_sentence(id: &str, lemmas: &[String]) -> Sentence {
    let tokens = lemmas
        .iter()
        .enumerate()
        .map(|(i, l)| Token::new(i + 1, l.as_str()).with_lemma(l.as_str()))
        .collect();
    Sentence::new(id, tokens).unwrap()
}

// ---- oracles ----

/// Every index subset of size 2..=4 whose span holds at most `max_gap`
/// non-members and whose lemmas hit the lexicon.
pub fn brute_force_matches(lemmas: &[String], lex: &Lexicon, max_gap: usize, reorder: bool) -> BTreeSet<Vec<usize>> {
    let n = lemmas.len();
    let mut out = BTreeSet::new();
    let key = if reorder { MatchKey::Multiset } else { MatchKey::Sequence };
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if !(2..=4).contains(&size) {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let span = idx[idx.len() - 1] - idx[0] + 1;
        if span - size > max_gap {
            continue;
        }
        let ls: Vec<&str> = idx.iter().map(|&i| lemmas[i].as_str()).collect();
        if lex.contains(&ls, key) {
            out.insert(idx.iter().map(|i| i + 1).collect());
        }
    }
    out
}

pub struct SetCounts {
    pub gold: usize,
    pub pred: usize,
    pub correct: usize,
}

/// Set arithmetic over (sentence id, indices) pairs by plain nested loops.
pub fn set_oracle(gold: &Corpus, pred: &Corpus) -> SetCounts {
    fn keys(c: &Corpus) -> Vec<(String, Vec<usize>)> {
        let mut v: Vec<(String, Vec<usize>)> = Vec::new();
        for s in c.sentences() {
            for m in s.mwes() {
                let k = (s.id().to_string(), m.token_indices().to_vec());
                if !v.contains(&k) {
                    v.push(k);
                }
            }
        }
        v
    }
    let g = keys(gold);
    let h = keys(pred);
    let correct = g.iter().filter(|k| h.contains(k)).count();
    SetCounts {
        gold: g.len(),
        pred: h.len(),
        correct,
    }
}

/// Reference P/R/F1 from counts: empty predictions give precision 1, empty
/// gold gives recall 1, F1 is 0 when both are 0.
pub fn oracle_prf(c: &SetCounts) -> (f64, f64, f64) {
    let p = if c.pred == 0 { 1.0 } else { c.correct as f64 / c.pred as f64 };
    let r = if c.gold == 0 { 1.0 } else { c.correct as f64 / c.gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}
