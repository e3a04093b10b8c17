//! MWE lexicon: a flat list of lemma sequences, e.g. the multiword entries of WordNet.
//!
//! File format: one entry per line, lemmas joined by underscores or spaces
//! (`stand_for`, `give a try`); blank lines and `#` comments are skipped.
//! Entries are case-folded and deduplicated.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::{fold_lemma, LemmaBag};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LexiconEntry {
    lemmas: Vec<String>,
}

impl LexiconEntry {
    /// Folds and validates the lemmas; `None` if fewer than two or any is blank.
    pub fn new(lemmas: impl IntoIterator<Item = impl AsRef<str>>) -> Option<Self> {
        let lemmas: Vec<String> = lemmas
            .into_iter()
            .map(|l| fold_lemma(l.as_ref()))
            .collect();
        if lemmas.len() < 2 || lemmas.iter().any(|l| l.is_empty() || l.contains(|c: char| c == '_' || c.is_whitespace())) {
            return None;
        }
        Some(LexiconEntry { lemmas })
    }

    pub fn lemmas(&self) -> &[String] {
        &self.lemmas
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn entry_id(&self) -> String {
        self.lemmas.join("_")
    }

    pub fn bag(&self) -> LemmaBag {
        LemmaBag::new(&self.lemmas)
    }
}

/// How a lemma list is compared against entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKey {
    /// Same lemmas in the same order.
    Sequence,
    /// Same lemmas in any order.
    Multiset,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_sequence: HashMap<Vec<String>, usize>,
    by_first: HashMap<String, Vec<usize>>,
    by_bag: HashMap<LemmaBag, Vec<usize>>,
    by_member: HashMap<String, Vec<usize>>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Lexicon {}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Self {
        let mut lex = Lexicon::new();
        for e in entries {
            lex.insert(e);
        }
        lex
    }

    /// Adds an entry; returns false if it was already present.
    pub fn insert(&mut self, entry: LexiconEntry) -> bool {
        if self.by_sequence.contains_key(&entry.lemmas) {
            return false;
        }
        let id = self.entries.len();
        self.by_sequence.insert(entry.lemmas.clone(), id);
        self.by_first
            .entry(entry.lemmas[0].clone())
            .or_default()
            .push(id);
        self.by_bag.entry(entry.bag()).or_default().push(id);
        let mut members = entry.lemmas.clone();
        members.sort();
        members.dedup();
        for m in members {
            self.by_member.entry(m).or_default().push(id);
        }
        self.entries.push(entry);
        true
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &LexiconEntry {
        &self.entries[id]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_entry_len(&self) -> usize {
        self.entries.iter().map(LexiconEntry::len).max().unwrap_or(0)
    }

    /// Membership test. Lemmas are folded before comparison.
    pub fn contains<S: AsRef<str>>(&self, lemmas: &[S], key: MatchKey) -> bool {
        let folded: Vec<String> = lemmas.iter().map(|l| fold_lemma(l.as_ref())).collect();
        match key {
            MatchKey::Sequence => self.by_sequence.contains_key(&folded),
            MatchKey::Multiset => self.by_bag.contains_key(&LemmaBag::new(&folded)),
        }
    }

    pub fn contains_bag(&self, bag: &LemmaBag) -> bool {
        self.by_bag.contains_key(bag)
    }

    pub fn id_of_sequence(&self, folded: &[String]) -> Option<usize> {
        self.by_sequence.get(folded).copied()
    }

    pub(crate) fn starting_with(&self, folded_lemma: &str) -> &[usize] {
        self.by_first.get(folded_lemma).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn containing(&self, folded_lemma: &str) -> &[usize] {
        self.by_member.get(folded_lemma).map_or(&[], Vec::as_slice)
    }

    pub fn with_bag(&self, bag: &LemmaBag) -> &[usize] {
        self.by_bag.get(bag).map_or(&[], Vec::as_slice)
    }

    /// Writes one underscore-joined entry per line, in insertion order.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(out, "{}", e.entry_id())?;
        }
        Ok(())
    }
}

pub fn load_lexicon<R: BufRead>(reader: R) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_matches(|c: char| c == '_' || c.is_whitespace());
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c == '_' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        let entry = LexiconEntry::new(&parts).ok_or_else(|| LexiconError::Parse {
            line: i + 1,
            reason: format!("entry {line:?} has fewer than two lemmas"),
        })?;
        lex.insert(entry);
    }
    Ok(lex)
}

pub fn load_lexicon_str(text: &str) -> Result<Lexicon, LexiconError> {
    load_lexicon(text.as_bytes())
}
