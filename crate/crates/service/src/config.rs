//! `config.json` in the data directory.
//!
//! ```json
//! {
//!   "annotators": { "alice": "token-a", "bob": "token-b" },
//!   "reviewers": { "rev": "token-r" },
//!   "rows": 9,
//!   "assignments": { "s1": ["alice", "bob"] },
//!   "max_gap": 3
//! }
//! ```
//!
//! `assignments` is optional; sentences without an entry get a pair of
//! annotators in round-robin order over the sorted annotator ids.

use std::collections::{BTreeMap, BTreeSet};

use mwekit_core::identify::MatchConfig;
use mwekit_core::Corpus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ROWS: usize = 9;

fn default_rows() -> usize {
    DEFAULT_ROWS
}

fn default_gap() -> usize {
    MatchConfig::default().max_gap
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Annotator id to bearer token.
    pub annotators: BTreeMap<String, String>,
    /// Reviewer id to bearer token.
    #[serde(default)]
    pub reviewers: BTreeMap<String, String>,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default)]
    pub assignments: BTreeMap<String, [String; 2]>,
    /// Gap window for consistency candidate search.
    #[serde(default = "default_gap")]
    pub max_gap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("at least two annotators are required")]
    TooFewAnnotators,
    #[error("rows must be at least 1")]
    NoRows,
    #[error("token for {0:?} is empty or shared with another user")]
    BadToken(String),
    #[error("user id {0:?} is used both as annotator and reviewer")]
    DualRole(String),
    #[error("assignment for unknown sentence {0:?}")]
    UnknownSentence(String),
    #[error("sentence {sentence:?} is assigned to unknown annotator {annotator:?}")]
    UnknownAnnotator { sentence: String, annotator: String },
    #[error("sentence {0:?} must be assigned to two different annotators")]
    SameAnnotatorTwice(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    Annotator,
    Reviewer,
}

impl ServiceConfig {
    pub fn validate(&self, corpus: &Corpus) -> Result<(), ConfigError> {
        if self.annotators.len() < 2 {
            return Err(ConfigError::TooFewAnnotators);
        }
        if self.rows == 0 {
            return Err(ConfigError::NoRows);
        }
        let mut tokens = BTreeSet::new();
        for (id, tok) in self.annotators.iter().chain(&self.reviewers) {
            if tok.is_empty() || !tokens.insert(tok.as_str()) {
                return Err(ConfigError::BadToken(id.clone()));
            }
        }
        if let Some(id) = self.reviewers.keys().find(|r| self.annotators.contains_key(*r)) {
            return Err(ConfigError::DualRole(id.clone()));
        }
        for (sid, pair) in &self.assignments {
            if corpus.get(sid).is_none() {
                return Err(ConfigError::UnknownSentence(sid.clone()));
            }
            for a in pair {
                if !self.annotators.contains_key(a) {
                    return Err(ConfigError::UnknownAnnotator {
                        sentence: sid.clone(),
                        annotator: a.clone(),
                    });
                }
            }
            if pair[0] == pair[1] {
                return Err(ConfigError::SameAnnotatorTwice(sid.clone()));
            }
        }
        Ok(())
    }

    /// The user owning a bearer token.
    pub fn authenticate(&self, token: &str) -> Option<(String, Role)> {
        let find = |m: &BTreeMap<String, String>| {
            m.iter().find(|(_, t)| t.as_str() == token).map(|(id, _)| id.clone())
        };
        find(&self.annotators)
            .map(|id| (id, Role::Annotator))
            .or_else(|| find(&self.reviewers).map(|id| (id, Role::Reviewer)))
    }

    /// The two annotators of every sentence, in corpus order.
    pub fn assign(&self, corpus: &Corpus) -> BTreeMap<String, [String; 2]> {
        let ids: Vec<&String> = self.annotators.keys().collect();
        corpus
            .sentences()
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let pair = self.assignments.get(s.id()).cloned().unwrap_or_else(|| {
                    [ids[k % ids.len()].clone(), ids[(k + 1) % ids.len()].clone()]
                });
                (s.id().to_string(), pair)
            })
            .collect()
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            max_gap: self.max_gap,
            ..MatchConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mwekit_core::{Sentence, Token};

    fn corpus(n: usize) -> Corpus {
        Corpus::new(
            (1..=n)
                .map(|i| Sentence::new(format!("s{i}"), vec![Token::new(1, "w")]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn config(json: &str) -> ServiceConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn round_robin_pairs() {
        let cfg = config(r#"{"annotators": {"a": "1", "b": "2", "c": "3"}}"#);
        assert_eq!(cfg.rows, 9);
        let c = corpus(4);
        cfg.validate(&c).unwrap();
        let pairs = cfg.assign(&c);
        assert_eq!(pairs["s1"], ["a".to_string(), "b".to_string()]);
        assert_eq!(pairs["s3"], ["c".to_string(), "a".to_string()]);
        assert_eq!(pairs["s4"], ["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn validation() {
        let c = corpus(1);
        assert_eq!(
            config(r#"{"annotators": {"a": "1"}}"#).validate(&c),
            Err(ConfigError::TooFewAnnotators)
        );
        assert!(matches!(
            config(r#"{"annotators": {"a": "1", "b": "1"}}"#).validate(&c),
            Err(ConfigError::BadToken(_))
        ));
        assert!(matches!(
            config(r#"{"annotators": {"a": "1", "b": "2"}, "assignments": {"s1": ["a", "a"]}}"#).validate(&c),
            Err(ConfigError::SameAnnotatorTwice(_))
        ));
        assert!(matches!(
            config(r#"{"annotators": {"a": "1", "b": "2"}, "assignments": {"zz": ["a", "b"]}}"#).validate(&c),
            Err(ConfigError::UnknownSentence(_))
        ));
    }

    #[test]
    fn authenticate_roles() {
        let cfg = config(r#"{"annotators": {"a": "1", "b": "2"}, "reviewers": {"r": "9"}}"#);
        assert_eq!(cfg.authenticate("9"), Some(("r".into(), Role::Reviewer)));
        assert_eq!(cfg.authenticate("2"), Some(("b".into(), Role::Annotator)));
        assert_eq!(cfg.authenticate("x"), None);
    }
}
