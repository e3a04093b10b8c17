//! Rule-based MWE identification against a lexicon.
//!
//! A match is a set of token positions whose lemmas, read in sentence order,
//! equal a lexicon entry (or, with `allow_reorder`, equal it as a multiset).
//! Members need not be adjacent: up to `max_gap` non-member tokens may sit
//! between the first and last member.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::model::{Corpus, MissingLemma, ModelError, MweInstance, MweSource, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    #[default]
    All,
    /// Greedy selection: earlier start first, then longer match.
    LongestNonOverlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub max_gap: usize,
    pub allow_reorder: bool,
    pub overlap_policy: OverlapPolicy,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            max_gap: 3,
            allow_reorder: false,
            overlap_policy: OverlapPolicy::All,
        }
    }
}

/// A lexicon hit: 1-based token indices plus the id of the matched entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconMatch {
    pub indices: Vec<usize>,
    pub entry: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    MissingLemma(#[from] MissingLemma),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-sentence failures collected over a whole corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusErrors(pub Vec<IdentifyError>);

impl fmt::Display for CorpusErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sentence(s) failed", self.0.len())?;
        for e in self.0.iter().take(5) {
            write!(f, "; {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CorpusErrors {}

/// All lexicon matches over folded lemmas, before the overlap policy is applied.
/// Sorted by index list; when several entries share a multiset, the first one
/// inserted into the lexicon is reported.
pub fn lexicon_matches(lemmas: &[String], lex: &Lexicon, cfg: &MatchConfig) -> Vec<LexiconMatch> {
    let max_gap = cfg.max_gap.min(lemmas.len());
    let mut found: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut chosen = Vec::new();
    for start in 0..lemmas.len() {
        let lemma = &lemmas[start];
        if cfg.allow_reorder {
            for &id in lex.containing(lemma) {
                let mut remaining: Vec<&str> = lex.entry(id).lemmas().iter().map(String::as_str).collect();
                let pos = remaining.iter().position(|l| *l == lemma.as_str()).expect("indexed member");
                remaining.swap_remove(pos);
                chosen.clear();
                chosen.push(start);
                extend_unordered(lemmas, &mut remaining, start, 0, max_gap, &mut chosen, &mut |idx| {
                    record(&mut found, idx, id)
                });
            }
        } else {
            for &id in lex.starting_with(lemma) {
                let rest = &lex.entry(id).lemmas()[1..];
                chosen.clear();
                chosen.push(start);
                extend_ordered(lemmas, rest, start, 0, max_gap, &mut chosen, &mut |idx| {
                    record(&mut found, idx, id)
                });
            }
        }
    }
    found
        .into_iter()
        .map(|(indices, entry)| LexiconMatch { indices, entry })
        .collect()
}

fn record(found: &mut BTreeMap<Vec<usize>, usize>, positions: &[usize], entry: usize) {
    let indices: Vec<usize> = positions.iter().map(|p| p + 1).collect();
    found
        .entry(indices)
        .and_modify(|e| *e = (*e).min(entry))
        .or_insert(entry);
}

fn extend_ordered(
    lemmas: &[String],
    rest: &[String],
    prev: usize,
    gap_used: usize,
    max_gap: usize,
    chosen: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    let Some((target, tail)) = rest.split_first() else {
        emit(chosen);
        return;
    };
    let last = (prev + 1 + (max_gap - gap_used)).min(lemmas.len().saturating_sub(1));
    for next in prev + 1..=last {
        if lemmas[next] == *target {
            chosen.push(next);
            extend_ordered(lemmas, tail, next, gap_used + (next - prev - 1), max_gap, chosen, emit);
            chosen.pop();
        }
    }
}

fn extend_unordered(
    lemmas: &[String],
    remaining: &mut Vec<&str>,
    prev: usize,
    gap_used: usize,
    max_gap: usize,
    chosen: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if remaining.is_empty() {
        emit(chosen);
        return;
    }
    let last = (prev + 1 + (max_gap - gap_used)).min(lemmas.len().saturating_sub(1));
    for next in prev + 1..=last {
        if let Some(pos) = remaining.iter().position(|l| *l == lemmas[next].as_str()) {
            let taken = remaining.swap_remove(pos);
            chosen.push(next);
            extend_unordered(lemmas, remaining, next, gap_used + (next - prev - 1), max_gap, chosen, emit);
            chosen.pop();
            remaining.push(taken);
            let end = remaining.len() - 1;
            remaining.swap(pos, end);
        }
    }
}

fn apply_policy(matches: Vec<LexiconMatch>, policy: OverlapPolicy) -> Vec<LexiconMatch> {
    match policy {
        OverlapPolicy::All => matches,
        OverlapPolicy::LongestNonOverlapping => {
            let mut ordered = matches;
            ordered.sort_by(|a, b| {
                a.indices[0]
                    .cmp(&b.indices[0])
                    .then(b.indices.len().cmp(&a.indices.len()))
                    .then(a.indices.cmp(&b.indices))
            });
            let mut used = std::collections::BTreeSet::new();
            let mut kept: Vec<LexiconMatch> = Vec::new();
            for m in ordered {
                if m.indices.iter().all(|i| !used.contains(i)) {
                    used.extend(m.indices.iter().copied());
                    kept.push(m);
                }
            }
            kept.sort_by(|a, b| a.indices.cmp(&b.indices));
            kept
        }
    }
}

/// Matches with the overlap policy applied, for callers that need the entry ids.
pub fn identify_matches(
    sentence: &Sentence,
    lex: &Lexicon,
    cfg: &MatchConfig,
) -> Result<Vec<LexiconMatch>, MissingLemma> {
    if lex.is_empty() {
        return Ok(Vec::new());
    }
    let lemmas = sentence.lemmas()?;
    Ok(apply_policy(lexicon_matches(&lemmas, lex, cfg), cfg.overlap_policy))
}

pub fn identify(
    sentence: &Sentence,
    lex: &Lexicon,
    cfg: &MatchConfig,
) -> Result<Vec<MweInstance>, MissingLemma> {
    Ok(identify_matches(sentence, lex, cfg)?
        .into_iter()
        .map(|m| MweInstance::new(m.indices, MweSource::Predicted).expect("matches span two or more tokens"))
        .collect())
}

/// Runs [`identify`] on every sentence in parallel. Each output sentence keeps
/// its tokens, flags and metadata; its MWEs are replaced by the predictions.
pub fn identify_corpus(
    corpus: &Corpus,
    lex: &Lexicon,
    cfg: &MatchConfig,
) -> Result<Corpus, CorpusErrors> {
    let results: Vec<Result<Sentence, IdentifyError>> = corpus
        .sentences()
        .par_iter()
        .map(|s| {
            let predicted = identify(s, lex, cfg)?;
            Ok(s.clone().with_mwes(predicted)?)
        })
        .collect();
    let mut errors = Vec::new();
    let mut sentences = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(s) => sentences.push(s),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(CorpusErrors(errors));
    }
    let mut out = Corpus::new(sentences).map_err(|e| CorpusErrors(vec![e.into()]))?;
    for (k, v) in corpus.metadata() {
        out = out
            .with_metadata(k.clone(), v.clone())
            .map_err(|e| CorpusErrors(vec![e.into()]))?;
    }
    Ok(out)
}
