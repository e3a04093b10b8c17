//! Annotation-consistency audit.
//!
//! Labeled MWEs are mined into a lexicon keyed by their lemmas; the identifier
//! then re-finds unlabeled occurrences of the same lemma multisets elsewhere
//! in the corpus. A human accepts or rejects each candidate. Accepting only
//! ever adds labels.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::MweKey;
use crate::identify::{identify_matches, MatchConfig, OverlapPolicy};
use crate::lexicon::{Lexicon, LexiconEntry};
use crate::model::{Corpus, MissingLemma, ModelError, MweInstance, MweSource, Sentence};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsistencyError {
    #[error("candidate {id} is stale: {reason}")]
    StaleCandidate { id: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Lemma keys of all labeled MWEs, each with the first labeled occurrence.
#[derive(Debug, Clone, Default)]
pub struct LabeledSet {
    lexicon: Lexicon,
    exemplars: Vec<MweKey>,
    exemplar_surfaces: Vec<String>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Underscore-joined lemma sequences in mining order.
    pub fn keys(&self) -> impl Iterator<Item = String> + '_ {
        self.lexicon.entries().iter().map(LexiconEntry::entry_id)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        let lemmas: Vec<String> = key.split('_').map(str::to_string).collect();
        self.lexicon.id_of_sequence(&lemmas).is_some()
    }

    pub fn exemplar(&self, key: &str) -> Option<&MweKey> {
        let lemmas: Vec<String> = key.split('_').map(str::to_string).collect();
        self.lexicon.id_of_sequence(&lemmas).map(|id| &self.exemplars[id])
    }
}

/// Collects every labeled MWE, whatever its source. MWEs whose lemmas cannot
/// form a lexicon entry (a lemma containing `_` or whitespace) are skipped.
pub fn mine_labeled_set(c: &Corpus) -> Result<LabeledSet, MissingLemma> {
    let mut set = LabeledSet::default();
    for s in c.sentences() {
        for m in s.mwes() {
            let Some(entry) = LexiconEntry::new(s.lemma_sequence(m)?) else {
                continue;
            };
            if set.lexicon.insert(entry) {
                set.exemplars.push(MweKey::of(s, m));
                set.exemplar_surfaces.push(s.surface_of(m));
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    #[default]
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyCandidate {
    /// `"{sentence_id}:{indices joined by commas}"`.
    pub id: String,
    pub sentence_id: String,
    pub token_indices: Vec<usize>,
    pub surface: String,
    /// Lemma key of the labeled MWE this span mirrors.
    pub matched_entry: String,
    pub exemplar: MweKey,
    pub exemplar_surface: String,
    /// Fingerprint of the sentence tokens at discovery time.
    pub sentence_digest: String,
    #[serde(default)]
    pub status: CandidateStatus,
}

pub fn candidate_id(sentence_id: &str, indices: &[usize]) -> String {
    let joined: Vec<String> = indices.iter().map(usize::to_string).collect();
    format!("{sentence_id}:{}", joined.join(","))
}

/// SHA-256 over the surface and lemma of every token.
pub fn sentence_digest(s: &Sentence) -> String {
    let mut h = Sha256::new();
    for t in s.tokens() {
        h.update(t.surface.as_bytes());
        h.update([0x1f]);
        h.update(t.lemma.as_deref().unwrap_or("").as_bytes());
        h.update([0x1e]);
    }
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// The matching settings actually used: reordering on, overlaps kept.
pub fn effective_config(cfg: &MatchConfig) -> MatchConfig {
    MatchConfig {
        max_gap: cfg.max_gap,
        allow_reorder: true,
        overlap_policy: OverlapPolicy::All,
    }
}

/// Unlabeled spans matching a mined key, ordered by sentence then indices.
pub fn find_candidates(
    c: &Corpus,
    labeled: &LabeledSet,
    cfg: &MatchConfig,
) -> Result<Vec<ConsistencyCandidate>, MissingLemma> {
    let cfg = effective_config(cfg);
    let mut out = Vec::new();
    if labeled.is_empty() {
        return Ok(out);
    }
    for s in c.sentences() {
        let existing: BTreeSet<&[usize]> = s.mwes().iter().map(MweInstance::token_indices).collect();
        let matches = identify_matches(s, &labeled.lexicon, &cfg)?;
        let mut digest = None;
        for m in matches {
            if existing.contains(m.indices.as_slice()) {
                continue;
            }
            let inst = MweInstance::new(m.indices.clone(), MweSource::ConsistencyAdded)
                .expect("matches span two or more tokens");
            let digest = digest.get_or_insert_with(|| sentence_digest(s)).clone();
            out.push(ConsistencyCandidate {
                id: candidate_id(s.id(), &m.indices),
                sentence_id: s.id().to_string(),
                surface: s.surface_of(&inst),
                token_indices: m.indices,
                matched_entry: labeled.lexicon.entry(m.entry).entry_id(),
                exemplar: labeled.exemplars[m.entry].clone(),
                exemplar_surface: labeled.exemplar_surfaces[m.entry].clone(),
                sentence_digest: digest,
                status: CandidateStatus::Pending,
            });
        }
    }
    Ok(out)
}

/// Checks that the candidate still refers to the same sentence content.
pub fn check_fresh(c: &Corpus, cand: &ConsistencyCandidate) -> Result<(), ConsistencyError> {
    let stale = |reason: &str| ConsistencyError::StaleCandidate {
        id: cand.id.clone(),
        reason: reason.to_string(),
    };
    let s = c.get(&cand.sentence_id).ok_or_else(|| stale("sentence no longer exists"))?;
    if sentence_digest(s) != cand.sentence_digest {
        return Err(stale("sentence content changed"));
    }
    if cand.token_indices.iter().any(|&i| i == 0 || i > s.len()) {
        return Err(stale("indices outside the sentence"));
    }
    Ok(())
}

/// Adds accepted candidates as `consistency-added` MWEs. Rejections change
/// nothing. Spans that are already labeled are left alone, so re-applying the
/// same decisions is a no-op.
pub fn apply_decisions(
    c: &Corpus,
    decisions: &[(ConsistencyCandidate, Decision)],
) -> Result<Corpus, ConsistencyError> {
    let mut out = c.clone();
    for (cand, decision) in decisions {
        check_fresh(&out, cand)?;
        if *decision == Decision::Rejected {
            continue;
        }
        let s = out.get(&cand.sentence_id).expect("checked fresh");
        if s.mwes().iter().any(|m| m.token_indices() == cand.token_indices.as_slice()) {
            continue;
        }
        let inst = MweInstance::new(cand.token_indices.clone(), MweSource::ConsistencyAdded)?;
        let updated = s.clone().with_mwe(inst)?;
        out = out.replace_sentence(updated)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub schema_version: u32,
    pub labeled_keys: usize,
    pub config: MatchConfig,
    pub candidates: Vec<ConsistencyCandidate>,
}

pub fn audit(c: &Corpus, cfg: &MatchConfig) -> Result<ConsistencyReport, MissingLemma> {
    let labeled = mine_labeled_set(c)?;
    let candidates = find_candidates(c, &labeled, cfg)?;
    Ok(ConsistencyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        labeled_keys: labeled.len(),
        config: effective_config(cfg),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Token;

    fn sent(id: &str, words: &[(&str, &str)], mwes: &[&[usize]]) -> Sentence {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, (w, l))| Token::new(i + 1, *w).with_lemma(*l))
            .collect();
        let ms = mwes
            .iter()
            .map(|ix| MweInstance::new(ix.to_vec(), MweSource::Gold).unwrap())
            .collect();
        Sentence::new(id, tokens).unwrap().with_mwes(ms).unwrap()
    }

    fn give_try_corpus() -> Corpus {
        let labeled = sent(
            "a",
            &[("Give", "give"), ("it", "it"), ("a", "a"), ("try", "try")],
            &[&[1, 3, 4]],
        );
        let unlabeled = sent(
            "b",
            &[
                ("Would", "would"),
                ("recomend", "recomend"),
                ("giving", "give"),
                ("this", "this"),
                ("a", "a"),
                ("try", "try"),
            ],
            &[],
        );
        Corpus::new(vec![labeled, unlabeled]).unwrap()
    }

    #[test]
    fn mines_give_a_try() {
        let m = mine_labeled_set(&give_try_corpus()).unwrap();
        assert!(m.contains_key("give_a_try"));
        assert_eq!(m.exemplar("give_a_try").unwrap().sentence_id, "a");
        assert!(mine_labeled_set(&Corpus::default()).unwrap().is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let c = Corpus::new(vec![
            sent("a", &[("at", "at"), ("least", "least")], &[&[1, 2]]),
            sent("b", &[("At", "at"), ("least", "least")], &[&[1, 2]]),
        ])
        .unwrap();
        let m = mine_labeled_set(&c).unwrap();
        assert_eq!(m.len(), 1);
        assert!(find_candidates(&c, &m, &MatchConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn give_try_fixpoint() {
        let c = give_try_corpus();
        let m = mine_labeled_set(&c).unwrap();
        let cands = find_candidates(&c, &m, &MatchConfig::default()).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].id, "b:3,5,6");
        assert_eq!(cands[0].surface, "giving a try");
        assert_eq!(cands[0].exemplar_surface, "Give a try");

        let decisions: Vec<_> = cands.iter().map(|c| (c.clone(), Decision::Accepted)).collect();
        let once = apply_decisions(&c, &decisions).unwrap();
        assert_eq!(once.mwe_count(), 2);
        assert_eq!(*once.get("b").unwrap().mwes()[0].source(), MweSource::ConsistencyAdded);
        assert_eq!(apply_decisions(&once, &decisions).unwrap(), once);

        let again = audit(&once, &MatchConfig::default()).unwrap();
        assert!(again.candidates.is_empty());
    }

    #[test]
    fn reject_changes_nothing() {
        let c = give_try_corpus();
        let cands = audit(&c, &MatchConfig::default()).unwrap().candidates;
        let decisions: Vec<_> = cands.into_iter().map(|c| (c, Decision::Rejected)).collect();
        assert_eq!(apply_decisions(&c, &decisions).unwrap(), c);
    }

    #[test]
    fn empty_labeled_set() {
        let c = give_try_corpus();
        let none = LabeledSet::default();
        assert!(find_candidates(&c, &none, &MatchConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn stale_candidate() {
        let c = give_try_corpus();
        let cand = audit(&c, &MatchConfig::default()).unwrap().candidates.remove(0);
        let changed = Corpus::new(vec![
            c.get("a").unwrap().clone(),
            sent("b", &[("x", "x"), ("y", "y")], &[]),
        ])
        .unwrap();
        assert!(matches!(
            apply_decisions(&changed, &[(cand, Decision::Accepted)]),
            Err(ConsistencyError::StaleCandidate { .. })
        ));
    }

    #[test]
    fn rearranged_occurrence_surfaces() {
        let c = Corpus::new(vec![
            sent("a", &[("break", "break"), ("my", "my"), ("heart", "heart")], &[&[1, 3]]),
            sent("b", &[("heart", "heart"), ("is", "be"), ("broken", "break")], &[]),
        ])
        .unwrap();
        let cands = audit(&c, &MatchConfig::default()).unwrap().candidates;
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].token_indices, vec![1, 3]);
        assert_eq!(cands[0].matched_entry, "break_heart");
    }
}
