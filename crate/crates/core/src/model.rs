//! Core corpus types: tokens, multiword expression instances, sentences and corpora.
//!
//! Token indices are 1-based, matching the CoNLL-U convention; a dependency head
//! of `0` denotes the root. Every type here is validated on construction and is
//! immutable afterwards, so values can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Flag carried by sentences that an annotator marked as hard to judge.
pub const UNCLEAR_FLAG: &str = "unclear";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("token at position {position} has index {found}")]
    TokenIndex { position: usize, found: usize },
    #[error("token {index}: invalid {field}: {reason}")]
    InvalidField {
        index: usize,
        field: &'static str,
        reason: &'static str,
    },
    #[error("token {index}: head {head} is out of range")]
    HeadOutOfRange { index: usize, head: usize },
    #[error("token {index} is its own head")]
    SelfHead { index: usize },
    #[error("an MWE needs at least two tokens, got {0}")]
    MweTooShort(usize),
    #[error("MWE token index {0} is repeated")]
    DuplicateMweIndex(usize),
    #[error("MWE token index {index} is outside the sentence (1..={len})")]
    MweIndexOutOfRange { index: usize, len: usize },
    #[error("duplicate sentence id {0:?}")]
    DuplicateSentenceId(String),
    #[error("invalid sentence id {0:?}")]
    InvalidSentenceId(String),
    #[error("invalid flag or metadata entry {0:?}")]
    InvalidAnnotation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token {index} of sentence {sentence_id:?} has no lemma")]
pub struct MissingLemma {
    pub sentence_id: String,
    pub index: usize,
}

/// Case-folds a lemma for comparison: NFC normalization followed by lowercasing.
pub fn fold_lemma(lemma: &str) -> String {
    lemma.nfc().collect::<String>().to_lowercase()
}

/// The 17 Universal Dependencies part-of-speech tags.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Upos {
    ADJ,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::ADJ,
        Upos::ADP,
        Upos::ADV,
        Upos::AUX,
        Upos::CCONJ,
        Upos::DET,
        Upos::INTJ,
        Upos::NOUN,
        Upos::NUM,
        Upos::PART,
        Upos::PRON,
        Upos::PROPN,
        Upos::PUNCT,
        Upos::SCONJ,
        Upos::SYM,
        Upos::VERB,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::ADJ => "ADJ",
            Upos::ADP => "ADP",
            Upos::ADV => "ADV",
            Upos::AUX => "AUX",
            Upos::CCONJ => "CCONJ",
            Upos::DET => "DET",
            Upos::INTJ => "INTJ",
            Upos::NOUN => "NOUN",
            Upos::NUM => "NUM",
            Upos::PART => "PART",
            Upos::PRON => "PRON",
            Upos::PROPN => "PROPN",
            Upos::PUNCT => "PUNCT",
            Upos::SCONJ => "SCONJ",
            Upos::SYM => "SYM",
            Upos::VERB => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown UPOS tag {0:?}")]
pub struct ParseUposError(pub String);

impl FromStr for Upos {
    type Err = ParseUposError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Upos::ALL
            .iter()
            .copied()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| ParseUposError(s.to_string()))
    }
}

/// Syntactic category of an MWE, decided by the part of speech of its head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MweType {
    Noun,
    Verb,
    ModConn,
    Clause,
    Other,
}

impl MweType {
    pub const ALL: [MweType; 5] = [
        MweType::Noun,
        MweType::Verb,
        MweType::ModConn,
        MweType::Clause,
        MweType::Other,
    ];

    /// Label used in the MWE column and in reports.
    pub fn label(self) -> &'static str {
        match self {
            MweType::Noun => "NOUN",
            MweType::Verb => "VERB",
            MweType::ModConn => "MOD/CONN",
            MweType::Clause => "CLAUSE",
            MweType::Other => "OTHER",
        }
    }
}

impl fmt::Display for MweType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown MWE type {0:?}")]
pub struct ParseMweTypeError(pub String);

impl FromStr for MweType {
    type Err = ParseMweTypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NOUN" => Ok(MweType::Noun),
            "VERB" => Ok(MweType::Verb),
            "MOD/CONN" | "MODCONN" | "MOD_CONN" => Ok(MweType::ModConn),
            "CLAUSE" => Ok(MweType::Clause),
            "OTHER" => Ok(MweType::Other),
            _ => Err(ParseMweTypeError(s.to_string())),
        }
    }
}

/// Where an MWE annotation came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MweSource {
    Gold,
    Predicted,
    Annotator(String),
    ConsistencyAdded,
}

impl fmt::Display for MweSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MweSource::Gold => f.write_str("gold"),
            MweSource::Predicted => f.write_str("predicted"),
            MweSource::Annotator(id) => write!(f, "annotator:{id}"),
            MweSource::ConsistencyAdded => f.write_str("consistency-added"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown MWE source {0:?}")]
pub struct ParseMweSourceError(pub String);

impl FromStr for MweSource {
    type Err = ParseMweSourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(MweSource::Gold),
            "predicted" => Ok(MweSource::Predicted),
            "consistency-added" => Ok(MweSource::ConsistencyAdded),
            _ => match s.strip_prefix("annotator:") {
                Some(id) if is_plain_word(id) => Ok(MweSource::Annotator(id.to_string())),
                _ => Err(ParseMweSourceError(s.to_string())),
            },
        }
    }
}

impl Serialize for MweSource {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MweSource {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Non-empty and free of whitespace and of the separators used by the column format.
pub(crate) fn is_plain_word(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ';' || c == ':')
}

fn has_line_breaks_or_tabs(s: &str) -> bool {
    s.contains(['\t', '\n', '\r'])
}

/// One surface word with optional lemma, part of speech and dependency attachment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub lemma: Option<String>,
    pub upos: Option<Upos>,
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

impl Token {
    pub fn new(index: usize, surface: impl Into<String>) -> Self {
        Token {
            index,
            surface: surface.into(),
            lemma: None,
            upos: None,
            head: None,
            deprel: None,
        }
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = Some(lemma.into());
        self
    }

    pub fn with_upos(mut self, upos: Upos) -> Self {
        self.upos = Some(upos);
        self
    }

    pub fn with_dep(mut self, head: usize, deprel: impl Into<String>) -> Self {
        self.head = Some(head);
        self.deprel = Some(deprel.into());
        self
    }

    fn validate(&self, position: usize, len: usize) -> Result<(), ModelError> {
        let invalid = |field, reason| ModelError::InvalidField {
            index: self.index,
            field,
            reason,
        };
        if self.index != position {
            return Err(ModelError::TokenIndex {
                position,
                found: self.index,
            });
        }
        if self.surface.is_empty() {
            return Err(invalid("surface", "empty"));
        }
        if has_line_breaks_or_tabs(&self.surface) {
            return Err(invalid("surface", "contains a tab or line break"));
        }
        if let Some(lemma) = &self.lemma {
            if lemma.is_empty() || lemma == "_" {
                return Err(invalid("lemma", "empty"));
            }
            if has_line_breaks_or_tabs(lemma) {
                return Err(invalid("lemma", "contains a tab or line break"));
            }
        }
        if let Some(deprel) = &self.deprel {
            if deprel.is_empty() || deprel == "_" || deprel.chars().any(char::is_whitespace) {
                return Err(invalid("deprel", "empty or contains whitespace"));
            }
        }
        if let Some(head) = self.head {
            if head > len {
                return Err(ModelError::HeadOutOfRange {
                    index: self.index,
                    head,
                });
            }
            if head == self.index {
                return Err(ModelError::SelfHead { index: self.index });
            }
        }
        Ok(())
    }
}

/// A multiword expression inside one sentence: a set of token indices kept in
/// ascending order, plus an optional type and its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MweInstance {
    token_indices: Vec<usize>,
    mwe_type: Option<MweType>,
    source: MweSource,
}

impl MweInstance {
    /// Builds an instance from indices in any order; surface rearrangement is
    /// normalized away by sorting.
    pub fn new(
        indices: impl IntoIterator<Item = usize>,
        source: MweSource,
    ) -> Result<Self, ModelError> {
        let mut token_indices: Vec<usize> = indices.into_iter().collect();
        token_indices.sort_unstable();
        if let Some(w) = token_indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateMweIndex(w[0]));
        }
        if token_indices.len() < 2 {
            return Err(ModelError::MweTooShort(token_indices.len()));
        }
        if token_indices[0] == 0 {
            return Err(ModelError::MweIndexOutOfRange { index: 0, len: 0 });
        }
        Ok(MweInstance {
            token_indices,
            mwe_type: None,
            source,
        })
    }

    pub fn with_type(mut self, mwe_type: Option<MweType>) -> Self {
        self.mwe_type = mwe_type;
        self
    }

    pub fn with_source(mut self, source: MweSource) -> Self {
        self.source = source;
        self
    }

    pub fn token_indices(&self) -> &[usize] {
        &self.token_indices
    }

    pub fn mwe_type(&self) -> Option<MweType> {
        self.mwe_type
    }

    pub fn source(&self) -> &MweSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.token_indices.len()
    }

    /// Always false; instances hold at least two tokens.
    pub fn is_empty(&self) -> bool {
        self.token_indices.is_empty()
    }

    pub fn first(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last(&self) -> usize {
        self.token_indices[self.token_indices.len() - 1]
    }

    /// True iff the indices are not consecutive integers.
    pub fn is_discontinuous(&self) -> bool {
        self.last() - self.first() + 1 != self.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.token_indices.binary_search(&index).is_ok()
    }

    fn sort_key(&self) -> (&[usize], &MweSource, Option<MweType>) {
        (&self.token_indices, &self.source, self.mwe_type)
    }
}

/// Sorted multiset of case-folded lemmas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LemmaBag(Vec<String>);

impl LemmaBag {
    pub fn new(lemmas: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let mut v: Vec<String> = lemmas.into_iter().map(|l| fold_lemma(l.as_ref())).collect();
        v.sort();
        LemmaBag(v)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Underscore-joined lookup key.
    pub fn key(&self) -> String {
        self.0.join("_")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    id: String,
    tokens: Vec<Token>,
    mwes: Vec<MweInstance>,
    flags: BTreeSet<String>,
    metadata: BTreeMap<String, String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() || has_line_breaks_or_tabs(&id) || id.trim() != id {
            return Err(ModelError::InvalidSentenceId(id));
        }
        let len = tokens.len();
        for (i, token) in tokens.iter().enumerate() {
            token.validate(i + 1, len)?;
        }
        Ok(Sentence {
            id,
            tokens,
            mwes: Vec::new(),
            flags: BTreeSet::new(),
            metadata: BTreeMap::new(),
        })
    }

    /// Replaces the MWE list. Instances are checked against the sentence, put in
    /// canonical order, and duplicates with the same source are dropped.
    pub fn with_mwes(mut self, mwes: Vec<MweInstance>) -> Result<Self, ModelError> {
        for m in &mwes {
            if let MweSource::Annotator(id) = m.source() {
                if !is_plain_word(id) {
                    return Err(ModelError::InvalidAnnotation(id.clone()));
                }
            }
            if m.last() > self.tokens.len() {
                return Err(ModelError::MweIndexOutOfRange {
                    index: m.last(),
                    len: self.tokens.len(),
                });
            }
        }
        self.mwes = canonicalize(mwes);
        Ok(self)
    }

    pub fn with_mwe(self, mwe: MweInstance) -> Result<Self, ModelError> {
        let mut mwes = self.mwes.clone();
        mwes.push(mwe);
        self.with_mwes(mwes)
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Result<Self, ModelError> {
        let flag = flag.into();
        if !is_plain_word(&flag) {
            return Err(ModelError::InvalidAnnotation(flag));
        }
        self.flags.insert(flag);
        Ok(self)
    }

    pub fn without_flags(mut self) -> Self {
        self.flags.clear();
        self
    }

    /// Attaches a free-form `key = value` annotation (e.g. the data source).
    pub fn with_metadata(
        mut self,
        key: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let (key, value) = (key.into(), value.into());
        if !valid_metadata(&key, &value)
            || RESERVED_KEYS.contains(&key.as_str())
            || key.starts_with("global.")
        {
            return Err(ModelError::InvalidAnnotation(key));
        }
        self.metadata.insert(key, value);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mwes(&self) -> &[MweInstance] {
        &self.mwes
    }

    pub fn flags(&self) -> &BTreeSet<String> {
        &self.flags
    }

    pub fn is_unclear(&self) -> bool {
        self.flags.contains(UNCLEAR_FLAG)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Surface text with tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Folded lemma of the token at `index`.
    pub fn lemma_at(&self, index: usize) -> Result<String, MissingLemma> {
        self.token(index)
            .and_then(|t| t.lemma.as_deref())
            .map(fold_lemma)
            .ok_or_else(|| MissingLemma {
                sentence_id: self.id.clone(),
                index,
            })
    }

    /// Folded lemmas of every token, failing on the first token without one.
    pub fn lemmas(&self) -> Result<Vec<String>, MissingLemma> {
        (1..=self.len()).map(|i| self.lemma_at(i)).collect()
    }

    /// Lemmas of the MWE's constituents in index order.
    pub fn lemma_sequence(&self, m: &MweInstance) -> Result<Vec<String>, MissingLemma> {
        m.token_indices().iter().map(|&i| self.lemma_at(i)).collect()
    }

    pub fn lemma_multiset(&self, m: &MweInstance) -> Result<LemmaBag, MissingLemma> {
        Ok(LemmaBag::new(self.lemma_sequence(m)?))
    }

    pub fn surface_of(&self, m: &MweInstance) -> String {
        m.token_indices()
            .iter()
            .filter_map(|&i| self.token(i))
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub(crate) const RESERVED_KEYS: [&str; 3] = ["sent_id", "flag", "mwe_source"];

pub(crate) fn valid_metadata(key: &str, value: &str) -> bool {
    !key.is_empty()
        && !key.contains(['=', '\t', '\n', '\r', ' '])
        && !value.contains(['\n', '\r'])
        && value.trim() == value
}

fn canonicalize(mut mwes: Vec<MweInstance>) -> Vec<MweInstance> {
    mwes.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    mwes.dedup_by(|later, earlier| {
        later.token_indices == earlier.token_indices && later.source == earlier.source
    });
    mwes
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    metadata: BTreeMap<String, String>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(ModelError::DuplicateSentenceId(s.id.clone()));
            }
        }
        Ok(Corpus {
            sentences,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(
        mut self,
        key: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let (key, value) = (key.into(), value.into());
        if !valid_metadata(&key, &value) || key == "columns" {
            return Err(ModelError::InvalidAnnotation(key));
        }
        self.metadata.insert(key, value);
        Ok(self)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.sentences.iter().position(|s| s.id == id)
    }

    /// Rebuilds the corpus with every sentence transformed; ids must stay unique.
    pub fn map_sentences<E>(
        &self,
        mut f: impl FnMut(&Sentence) -> Result<Sentence, E>,
    ) -> Result<Corpus, E>
    where
        E: From<ModelError>,
    {
        let sentences = self.sentences.iter().map(&mut f).collect::<Result<_, _>>()?;
        let mut out = Corpus::new(sentences)?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// Same corpus with one sentence replaced (matched by id).
    pub fn replace_sentence(&self, sentence: Sentence) -> Result<Corpus, ModelError> {
        let mut out = self.clone();
        match out.position(sentence.id()) {
            Some(pos) => out.sentences[pos] = sentence,
            None => out.sentences.push(sentence),
        }
        Ok(out)
    }

    /// Drops sentences carrying the unclear flag.
    pub fn without_unclear(&self) -> Corpus {
        Corpus {
            sentences: self
                .sentences
                .iter()
                .filter(|s| !s.is_unclear())
                .cloned()
                .collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn mwe_count(&self) -> usize {
        self.sentences.iter().map(|s| s.mwes.len()).sum()
    }
}
