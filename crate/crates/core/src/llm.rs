//! Prompt assembly and the `tsv_to_tsv` exchange format used with instruction-tuned
//! language models.
//!
//! The model receives one word per line and answers with two tab-separated
//! columns: the echoed word and its MWE tag (empty, or `;`-joined MWE numbers).
//! Model output is untrusted; [`parse_llm_output`] never fails and reports
//! malformed lines as diagnostics instead.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MweInstance, MweSource, Sentence};

pub const SYSTEM_MESSAGE: &str =
    "You are a helpful system to identify multiple-word expressions (MWEs).";

const DEFINITION_PLACEHOLDER: &str = "[MWE_DEFINITION]";

const USER_TEMPLATE: &str = "Identify all the MWEs in the given sentence, and output their surface forms and the indices of their components.\n\
\n\
[MWE_DEFINITION]\n\
\n\
Each sentence is given as a string of words delimited by '\\n'. Respond in TSV format, where the first and second columns contain words and MWE tags, respectively. The MWE tag should be a string of MWE identifiers. When a word belongs to multiple MWEs, the tag should be a concatenation of their numbers delimited by semicolons.\n\
\n\
Sentence:\n";

const LONG_DEFINITION: &str = include_str!("../assets/definition_long.txt");
const SHORT_DEFINITION: &str = include_str!("../assets/definition_short.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Definition {
    #[default]
    Long,
    Short,
}

impl Definition {
    pub fn text(self) -> &'static str {
        match self {
            Definition::Long => LONG_DEFINITION,
            Definition::Short => SHORT_DEFINITION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("word {position} contains a tab or line break")]
    ControlCharacter { position: usize },
    #[error("word {position} is empty")]
    EmptyWord { position: usize },
}

/// A chat-style prompt: system message plus user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatPrompt {
    pub system: String,
    pub user: String,
}

impl ChatPrompt {
    /// Plain-text rendering with role headers, for inspection.
    pub fn render(&self) -> String {
        format!("[system]\n{}\n\n[user]\n{}", self.system, self.user)
    }
}

/// Formats words one per line, each terminated by `\n`.
pub fn format_words<S: AsRef<str>>(words: &[S]) -> Result<String, FormatError> {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        let w = w.as_ref();
        if w.is_empty() {
            return Err(FormatError::EmptyWord { position: i + 1 });
        }
        if w.contains(['\t', '\n', '\r']) {
            return Err(FormatError::ControlCharacter { position: i + 1 });
        }
        out.push_str(w);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_llm_input(sentence: &Sentence) -> Result<String, FormatError> {
    let words: Vec<&str> = sentence.tokens().iter().map(|t| t.surface.as_str()).collect();
    format_words(&words)
}

pub fn build_prompt(sentence: &Sentence, definition: Definition) -> Result<ChatPrompt, FormatError> {
    let mut user = USER_TEMPLATE.replacen(DEFINITION_PLACEHOLDER, definition.text(), 1);
    user.push_str(&to_llm_input(sentence)?);
    Ok(ChatPrompt {
        system: SYSTEM_MESSAGE.to_string(),
        user,
    })
}

/// Serializes the sentence's MWEs as the expected model answer. Instances that
/// share an index set are emitted once.
pub fn to_llm_output(sentence: &Sentence) -> String {
    let mut groups: Vec<&[usize]> = sentence.mwes().iter().map(|m| m.token_indices()).collect();
    groups.dedup();
    let mut tags: Vec<Vec<String>> = vec![Vec::new(); sentence.len()];
    for (n, indices) in groups.iter().enumerate() {
        for &i in indices.iter() {
            tags[i - 1].push((n + 1).to_string());
        }
    }
    let mut out = String::new();
    for (token, tag) in sentence.tokens().iter().zip(tags) {
        out.push_str(&token.surface);
        out.push('\t');
        out.push_str(&tag.join(";"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    BlankLine,
    MissingTab,
    ExtraColumns { columns: usize },
    WordMismatch { expected: String, found: String },
    BadTag { tag: String },
    UnexpectedLine,
    MissingLines { expected: usize, found: usize },
    SingletonTag { number: usize },
    DuplicateGroup { number: usize, same_as: usize },
}

/// A problem found in model output. `line` is 1-based; 0 refers to the output as a whole.
/// Problems with a whole MWE group point at the line where its number first appears.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDiagnostic {
    pub line: usize,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            DiagnosticKind::BlankLine => write!(f, "blank line skipped"),
            DiagnosticKind::MissingTab => write!(f, "no tab separator"),
            DiagnosticKind::ExtraColumns { columns } => write!(f, "{columns} columns, expected 2"),
            DiagnosticKind::WordMismatch { expected, found } => {
                write!(f, "word {found:?} does not echo {expected:?}")
            }
            DiagnosticKind::BadTag { tag } => write!(f, "unparseable tag {tag:?}"),
            DiagnosticKind::UnexpectedLine => write!(f, "more lines than words"),
            DiagnosticKind::MissingLines { expected, found } => {
                write!(f, "{found} word lines, expected {expected}")
            }
            DiagnosticKind::SingletonTag { number } => {
                write!(f, "MWE {number} tags a single word and was dropped")
            }
            DiagnosticKind::DuplicateGroup { number, same_as } => {
                write!(f, "MWE {number} repeats MWE {same_as}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub instances: Vec<MweInstance>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Parses a `tsv_to_tsv` answer for `sentence`. Non-blank lines align
/// positionally with the sentence's words; a line whose shape or echoed word is
/// wrong contributes no tags.
pub fn parse_llm_output(text: &str, sentence: &Sentence) -> ParsedOutput {
    let mut diagnostics = Vec::new();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut first_line: BTreeMap<usize, usize> = BTreeMap::new();
    let mut position = 0usize;

    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    for (i, raw) in lines.iter().enumerate() {
        let lineno = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let diag = |kind| LineDiagnostic { line: lineno, kind };
        if line.trim().is_empty() {
            diagnostics.push(diag(DiagnosticKind::BlankLine));
            continue;
        }
        position += 1;
        let Some(token) = sentence.token(position) else {
            diagnostics.push(diag(DiagnosticKind::UnexpectedLine));
            continue;
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() == 1 {
            diagnostics.push(diag(DiagnosticKind::MissingTab));
            continue;
        }
        if cols.len() > 2 {
            diagnostics.push(diag(DiagnosticKind::ExtraColumns {
                columns: cols.len(),
            }));
            continue;
        }
        let (word, tag) = (cols[0], cols[1].trim());
        if word != token.surface && word.trim() != token.surface.trim() {
            diagnostics.push(diag(DiagnosticKind::WordMismatch {
                expected: token.surface.clone(),
                found: word.to_string(),
            }));
            continue;
        }
        if tag.is_empty() {
            continue;
        }
        let numbers: Option<Vec<usize>> = tag
            .split(';')
            .map(|p| {
                let p = p.trim();
                p.bytes()
                    .all(|b| b.is_ascii_digit())
                    .then(|| p.parse::<usize>().ok())
                    .flatten()
            })
            .collect();
        match numbers {
            Some(numbers) => {
                for n in numbers {
                    first_line.entry(n).or_insert(lineno);
                    let members = groups.entry(n).or_default();
                    if members.last() != Some(&position) {
                        members.push(position);
                    }
                }
            }
            None => diagnostics.push(diag(DiagnosticKind::BadTag {
                tag: tag.to_string(),
            })),
        }
    }
    if position < sentence.len() {
        diagnostics.push(LineDiagnostic {
            line: 0,
            kind: DiagnosticKind::MissingLines {
                expected: sentence.len(),
                found: position,
            },
        });
    }

    let mut instances: Vec<MweInstance> = Vec::new();
    let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (number, members) in groups {
        if members.len() < 2 {
            diagnostics.push(LineDiagnostic {
                line: first_line[&number],
                kind: DiagnosticKind::SingletonTag { number },
            });
            continue;
        }
        if let Some(&same_as) = seen.get(&members) {
            diagnostics.push(LineDiagnostic {
                line: first_line[&number],
                kind: DiagnosticKind::DuplicateGroup { number, same_as },
            });
            continue;
        }
        seen.insert(members.clone(), number);
        // members are strictly increasing positions, so this cannot fail
        if let Ok(m) = MweInstance::new(members, MweSource::Predicted) {
            instances.push(m);
        }
    }
    instances.sort_by(|a, b| a.token_indices().cmp(b.token_indices()));
    ParsedOutput {
        instances,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Token;

    fn sentence(words: &[&str]) -> Sentence {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token::new(i + 1, *w))
            .collect();
        Sentence::new("s", tokens).unwrap()
    }

    fn acl() -> Sentence {
        sentence(&[
            "ACL",
            "stands",
            "for",
            "Association",
            "for",
            "Computational",
            "Linguistics",
        ])
    }

    fn indices(p: &ParsedOutput) -> Vec<Vec<usize>> {
        p.instances.iter().map(|m| m.token_indices().to_vec()).collect()
    }

    #[test]
    fn input_is_one_word_per_line() {
        let s = sentence(&["ACL", "stands", "for"]);
        assert_eq!(to_llm_input(&s).unwrap(), "ACL\nstands\nfor\n");
        assert_eq!(to_llm_input(&sentence(&[])).unwrap(), "");
    }

    #[test]
    fn tabs_in_words_rejected() {
        assert_eq!(
            format_words(&["ok", "a\tb"]),
            Err(FormatError::ControlCharacter { position: 2 })
        );
        assert_eq!(
            format_words(&["x\ny"]),
            Err(FormatError::ControlCharacter { position: 1 })
        );
    }

    #[test]
    fn parses_documented_example() {
        let s = sentence(&["ACL", "stands", "for"]);
        let p = parse_llm_output("ACL\t\nstands\t1\nfor\t1", &s);
        assert_eq!(indices(&p), vec![vec![2, 3]]);
        assert!(p.diagnostics.is_empty());
        assert_eq!(*p.instances[0].source(), MweSource::Predicted);
    }

    #[test]
    fn all_empty_tags() {
        let s = sentence(&["a", "b"]);
        let p = parse_llm_output("a\t\nb\t\n", &s);
        assert!(p.instances.is_empty());
        assert!(p.diagnostics.is_empty());
    }

    #[test]
    fn singleton_tag_dropped_with_diagnostic() {
        let s = sentence(&["a", "b", "c"]);
        let p = parse_llm_output("a\t\nb\t1\nc\t\n", &s);
        assert!(p.instances.is_empty());
        assert_eq!(
            p.diagnostics,
            vec![LineDiagnostic {
                line: 2,
                kind: DiagnosticKind::SingletonTag { number: 1 }
            }]
        );
    }

    #[test]
    fn overlapping_tags() {
        let s = sentence(&["letting", "in", "out"]);
        let p = parse_llm_output("letting\t1;2\nin\t1\nout\t2\n", &s);
        assert_eq!(indices(&p), vec![vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn malformed_lines_reported_not_fatal() {
        let s = sentence(&["a", "b", "c", "d"]);
        let text = "a\t1\r\n\nB\t1\nc\t1\tx\nd\t1;z\ne\t1\n";
        let p = parse_llm_output(text, &s);
        assert!(p.instances.is_empty());
        let kinds: Vec<&DiagnosticKind> = p.diagnostics.iter().map(|d| &d.kind).collect();
        assert!(matches!(kinds[0], DiagnosticKind::BlankLine));
        assert!(matches!(kinds[1], DiagnosticKind::WordMismatch { .. }));
        assert!(matches!(kinds[2], DiagnosticKind::ExtraColumns { columns: 3 }));
        assert!(matches!(kinds[3], DiagnosticKind::BadTag { .. }));
        assert!(matches!(kinds[4], DiagnosticKind::UnexpectedLine));
        assert!(matches!(kinds[5], DiagnosticKind::SingletonTag { number: 1 }));
    }

    #[test]
    fn short_output_reports_missing_lines() {
        let s = sentence(&["a", "b", "c"]);
        let p = parse_llm_output("a\t1\nb\t1\n", &s);
        assert_eq!(indices(&p), vec![vec![1, 2]]);
        assert_eq!(
            p.diagnostics[0].kind,
            DiagnosticKind::MissingLines {
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn gold_output_round_trips() {
        let s = sentence(&["letting", "in", "out"])
            .with_mwes(vec![
                MweInstance::new([1, 2], MweSource::Gold).unwrap(),
                MweInstance::new([1, 3], MweSource::Gold).unwrap(),
            ])
            .unwrap();
        let out = to_llm_output(&s);
        assert_eq!(out, "letting\t1;2\nin\t1\nout\t2\n");
        assert_eq!(indices(&parse_llm_output(&out, &s)), vec![vec![1, 2], vec![1, 3]]);
    }

    fn word_count(text: &str) -> usize {
        text.split_whitespace()
            .filter(|w| w.chars().any(char::is_alphabetic))
            .count()
    }

    #[test]
    fn definitions_have_reported_lengths() {
        // list numerals ("1.", "2.", "3.") are not words
        assert_eq!(word_count(Definition::Long.text()), 162);
        assert_eq!(word_count(Definition::Short.text()), 57);
    }

    #[test]
    fn prompts_differ_only_in_definition() {
        let s = acl();
        let long = build_prompt(&s, Definition::Long).unwrap();
        let short = build_prompt(&s, Definition::Short).unwrap();
        assert_eq!(long.system, short.system);
        assert_eq!(
            long.user.replacen(Definition::Long.text(), "", 1),
            short.user.replacen(Definition::Short.text(), "", 1)
        );
        assert_ne!(long.user, short.user);
    }

    #[test]
    fn prompt_layout() {
        let p = build_prompt(&acl(), Definition::Long).unwrap();
        assert_eq!(p.system, SYSTEM_MESSAGE);
        assert!(p.user.starts_with("Identify all the MWEs in the given sentence"));
        assert!(p.user.contains("\n\nHere, an MWE is defined as a sequence"));
        assert!(p
            .user
            .ends_with("Sentence:\nACL\nstands\nfor\nAssociation\nfor\nComputational\nLinguistics\n"));
        assert!(!p.user.contains(DEFINITION_PLACEHOLDER));
    }
}
