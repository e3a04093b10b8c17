//! Exact-match MWE scoring, recall breakdowns, inter-annotator agreement and
//! corpus statistics.
//!
//! An MWE is identified by its sentence id and token indices; type and source
//! play no part in matching.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::model::{Corpus, LemmaBag, MissingLemma, MweInstance, MweType, Sentence};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("corpus mismatch: {0}")]
    CorpusMismatch(String),
    #[error(transparent)]
    MissingLemma(#[from] MissingLemma),
    #[error("agreement needs at least two annotations, got {0}")]
    TooFewAnnotators(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MweKey {
    pub sentence_id: String,
    pub token_indices: Vec<usize>,
}

impl MweKey {
    pub fn of(s: &Sentence, m: &MweInstance) -> Self {
        MweKey {
            sentence_id: s.id().to_string(),
            token_indices: m.token_indices().to_vec(),
        }
    }
}

/// Distinct keys of a corpus.
pub fn mwe_keys(c: &Corpus) -> BTreeSet<MweKey> {
    c.sentences()
        .iter()
        .flat_map(|s| s.mwes().iter().map(move |m| MweKey::of(s, m)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision is 1 when nothing is predicted and recall is 1 when there is
/// nothing to find; F1 is 0 when both precision and recall are 0.
pub fn scores_from_counts(gold: usize, pred: usize, correct: usize) -> Scores {
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(correct, pred);
    let recall = ratio(correct, gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecall {
    pub category: String,
    pub gold: usize,
    pub correct: usize,
    /// `None` when the category has no gold MWEs.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub gold: usize,
    pub pred: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Partition name to per-category recall, in a fixed category order.
    pub breakdowns: BTreeMap<String, Vec<CategoryRecall>>,
}

impl EvalReport {
    pub fn scores(&self) -> Scores {
        Scores {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

fn check_aligned(gold: &Corpus, pred: &Corpus) -> Result<(), EvalError> {
    let g: BTreeMap<&str, usize> = gold.sentences().iter().map(|s| (s.id(), s.len())).collect();
    let p: BTreeMap<&str, usize> = pred.sentences().iter().map(|s| (s.id(), s.len())).collect();
    if let Some(id) = g.keys().find(|id| !p.contains_key(*id)) {
        return Err(EvalError::CorpusMismatch(format!("sentence {id:?} missing from predictions")));
    }
    if let Some(id) = p.keys().find(|id| !g.contains_key(*id)) {
        return Err(EvalError::CorpusMismatch(format!("sentence {id:?} missing from gold")));
    }
    for (id, n) in &g {
        if p[id] != *n {
            return Err(EvalError::CorpusMismatch(format!(
                "sentence {id:?} has {n} gold tokens but {} predicted tokens",
                p[id]
            )));
        }
    }
    Ok(())
}

pub fn score(gold: &Corpus, pred: &Corpus) -> Result<EvalReport, EvalError> {
    check_aligned(gold, pred)?;
    let g = mwe_keys(gold);
    let h = mwe_keys(pred);
    let correct = g.intersection(&h).count();
    let s = scores_from_counts(g.len(), h.len(), correct);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        gold: g.len(),
        pred: h.len(),
        correct,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        breakdowns: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Partition<'a> {
    Type,
    Continuity,
    InLexicon(&'a Lexicon),
    Seen(&'a Corpus),
}

impl Partition<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Partition::Type => "type",
            Partition::Continuity => "continuity",
            Partition::InLexicon(_) => "in_lexicon",
            Partition::Seen(_) => "seen",
        }
    }

    fn categories(&self) -> Vec<&'static str> {
        match self {
            Partition::Type => MweType::ALL.iter().map(|t| t.label()).collect(),
            Partition::Continuity => vec!["continuous", "discontinuous"],
            Partition::InLexicon(_) => vec!["in_lexicon", "not_in_lexicon"],
            Partition::Seen(_) => vec!["seen", "unseen"],
        }
    }
}

pub const UNTYPED: &str = "UNTYPED";

/// Lemma multisets of every MWE in a corpus.
pub fn lemma_bags(c: &Corpus) -> Result<HashSet<LemmaBag>, MissingLemma> {
    let mut out = HashSet::new();
    for s in c.sentences() {
        for m in s.mwes() {
            out.insert(s.lemma_multiset(m)?);
        }
    }
    Ok(out)
}

/// Recall within each category of gold MWEs. Each distinct gold key is placed
/// in exactly one category; for the type partition, the first instance of a
/// key in canonical order decides its type.
pub fn recall_breakdown(
    gold: &Corpus,
    pred: &Corpus,
    partition: Partition,
) -> Result<Vec<CategoryRecall>, EvalError> {
    check_aligned(gold, pred)?;
    let h = mwe_keys(pred);
    let seen_bags = match partition {
        Partition::Seen(train) => Some(lemma_bags(train)?),
        _ => None,
    };
    let mut counts: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    let mut done = HashSet::new();
    for s in gold.sentences() {
        for m in s.mwes() {
            let key = MweKey::of(s, m);
            if !done.insert(key.clone()) {
                continue;
            }
            let category = match partition {
                Partition::Type => m.mwe_type().map_or(UNTYPED, MweType::label),
                Partition::Continuity => {
                    if m.is_discontinuous() {
                        "discontinuous"
                    } else {
                        "continuous"
                    }
                }
                Partition::InLexicon(lex) => {
                    if lex.contains_bag(&s.lemma_multiset(m)?) {
                        "in_lexicon"
                    } else {
                        "not_in_lexicon"
                    }
                }
                Partition::Seen(_) => {
                    let bags = seen_bags.as_ref().expect("computed above");
                    if bags.contains(&s.lemma_multiset(m)?) {
                        "seen"
                    } else {
                        "unseen"
                    }
                }
            };
            let entry = counts.entry(category).or_default();
            entry.0 += 1;
            if h.contains(&key) {
                entry.1 += 1;
            }
        }
    }
    let mut names = partition.categories();
    if counts.contains_key(UNTYPED) {
        names.push(UNTYPED);
    }
    Ok(names
        .into_iter()
        .map(|name| {
            let (g, c) = counts.get(name).copied().unwrap_or((0, 0));
            CategoryRecall {
                category: name.to_string(),
                gold: g,
                correct: c,
                recall: (g > 0).then(|| c as f64 / g as f64),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions<'a> {
    pub lexicon: Option<&'a Lexicon>,
    pub train: Option<&'a Corpus>,
}

/// Overall scores plus every breakdown the options allow: type and continuity
/// always, in-lexicon with a lexicon, seen/unseen with a training corpus.
pub fn evaluate(gold: &Corpus, pred: &Corpus, opts: EvalOptions) -> Result<EvalReport, EvalError> {
    let mut report = score(gold, pred)?;
    let mut partitions = vec![Partition::Type, Partition::Continuity];
    if let Some(lex) = opts.lexicon {
        partitions.push(Partition::InLexicon(lex));
    }
    if let Some(train) = opts.train {
        partitions.push(Partition::Seen(train));
    }
    for p in partitions {
        report
            .breakdowns
            .insert(p.name().to_string(), recall_breakdown(gold, pred, p)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    pub schema_version: u32,
    pub annotators: usize,
    /// Symmetric matrix of pairwise F1; the diagonal is 1.
    pub pairwise_f1: Vec<Vec<f64>>,
    pub mean: f64,
    pub max: f64,
}

/// Pairwise exact-match F1 between annotations of the same sentences.
pub fn iaa(annotations: &[Corpus]) -> Result<IaaReport, EvalError> {
    let n = annotations.len();
    if n < 2 {
        return Err(EvalError::TooFewAnnotators(n));
    }
    let mut matrix = vec![vec![1.0; n]; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let f1 = score(&annotations[i], &annotations[j])?.f1;
            matrix[i][j] = f1;
            matrix[j][i] = f1;
            pairs.push(f1);
        }
    }
    Ok(IaaReport {
        schema_version: REPORT_SCHEMA_VERSION,
        annotators: n,
        pairwise_f1: matrix,
        mean: pairs.iter().sum::<f64>() / pairs.len() as f64,
        max: pairs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub count: usize,
    pub total: usize,
    /// Percentage; `None` when `total` is 0.
    pub percent: Option<f64>,
}

impl Ratio {
    fn new(count: usize, total: usize) -> Self {
        Ratio {
            count,
            total,
            percent: (total > 0).then(|| 100.0 * count as f64 / total as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub sentences: usize,
    pub words: usize,
    pub mwes: usize,
    /// Token positions covered by at least one MWE.
    pub mwe_words: usize,
    /// Percentage of words inside MWEs.
    pub density: f64,
    pub untyped: usize,
    /// Percentage of typed MWEs per type label; empty when no MWE is typed.
    pub type_proportions: BTreeMap<String, f64>,
    /// Share of discontinuous MWEs within each type.
    pub discontinuity_by_type: BTreeMap<String, Ratio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub schema_version: u32,
    pub total: GroupStats,
    /// Keyed by the `source` sentence metadata; sentences without it are not grouped.
    pub by_source: BTreeMap<String, GroupStats>,
}

pub const SOURCE_KEY: &str = "source";

pub fn group_stats<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> GroupStats {
    let mut n_sent = 0;
    let mut words = 0;
    let mut mwes = 0;
    let mut mwe_words = 0;
    let mut untyped = 0;
    let mut by_type: BTreeMap<MweType, (usize, usize)> = BTreeMap::new();
    for s in sentences {
        n_sent += 1;
        words += s.len();
        mwes += s.mwes().len();
        let covered: BTreeSet<usize> = s
            .mwes()
            .iter()
            .flat_map(|m| m.token_indices().iter().copied())
            .collect();
        mwe_words += covered.len();
        for m in s.mwes() {
            match m.mwe_type() {
                Some(t) => {
                    let e = by_type.entry(t).or_default();
                    e.0 += 1;
                    if m.is_discontinuous() {
                        e.1 += 1;
                    }
                }
                None => untyped += 1,
            }
        }
    }
    let typed: usize = by_type.values().map(|e| e.0).sum();
    let mut type_proportions = BTreeMap::new();
    let mut discontinuity_by_type = BTreeMap::new();
    if typed > 0 {
        for t in MweType::ALL {
            let (count, disc) = by_type.get(&t).copied().unwrap_or((0, 0));
            type_proportions.insert(t.label().to_string(), 100.0 * count as f64 / typed as f64);
            discontinuity_by_type.insert(t.label().to_string(), Ratio::new(disc, count));
        }
    }
    GroupStats {
        sentences: n_sent,
        words,
        mwes,
        mwe_words,
        density: if words == 0 {
            0.0
        } else {
            100.0 * mwe_words as f64 / words as f64
        },
        untyped,
        type_proportions,
        discontinuity_by_type,
    }
}

pub fn stats(c: &Corpus) -> CorpusStats {
    stats_all(std::slice::from_ref(c))
}

/// Statistics over several corpora read as one, e.g. the train and test
/// splits. Sentence ids need not be unique across corpora.
pub fn stats_all(corpora: &[Corpus]) -> CorpusStats {
    let all = || corpora.iter().flat_map(|c| c.sentences());
    let mut groups: BTreeMap<String, Vec<&Sentence>> = BTreeMap::new();
    for s in all() {
        if let Some(src) = s.metadata().get(SOURCE_KEY) {
            groups.entry(src.clone()).or_default().push(s);
        }
    }
    CorpusStats {
        schema_version: REPORT_SCHEMA_VERSION,
        total: group_stats(all()),
        by_source: groups
            .into_iter()
            .map(|(k, v)| (k, group_stats(v)))
            .collect(),
    }
}
