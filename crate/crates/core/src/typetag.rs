//! Dependency-based MWE type tagging.
//!
//! The head `w*` of an MWE is the member that has every other member among its
//! descendants. Its part of speech decides the type:
//!
//! | head UPOS                       | type                                              |
//! |---------------------------------|---------------------------------------------------|
//! | NOUN, PRON, PROPN               | `Verb` if a verbal relative clause of `w*` is in the MWE, else `Noun` |
//! | VERB, AUX                       | `Clause` if a nominal subject of `w*` is in the MWE, else `Verb` |
//! | ADP, ADJ, ADV, CCONJ, SCONJ     | `ModConn`                                         |
//! | anything else, or no head       | `Other`                                           |

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Corpus, ModelError, MweInstance, MweType, Sentence, Upos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("token {index} has no {field}")]
    MissingParse { index: usize, field: &'static str },
    #[error("malformed dependency tree: {0}")]
    MalformedTree(String),
}

/// Read-only view over a sentence's dependency tree. Token `i` (1-based) is
/// stored at position `i - 1`.
#[derive(Debug, Clone)]
pub struct DepView<'a> {
    heads: Vec<usize>,
    upos: Vec<Upos>,
    deprels: Vec<&'a str>,
}

impl<'a> DepView<'a> {
    /// Requires head, UPOS and deprel on every token, a single root and no cycles.
    pub fn new(sentence: &'a Sentence) -> Result<Self, TagError> {
        let mut heads = Vec::with_capacity(sentence.len());
        let mut upos = Vec::with_capacity(sentence.len());
        let mut deprels = Vec::with_capacity(sentence.len());
        for t in sentence.tokens() {
            let missing = |field| TagError::MissingParse { index: t.index, field };
            heads.push(t.head.ok_or_else(|| missing("head"))?);
            upos.push(t.upos.ok_or_else(|| missing("upos"))?);
            deprels.push(t.deprel.as_deref().ok_or_else(|| missing("deprel"))?);
        }
        let view = DepView { heads, upos, deprels };
        view.check_tree()?;
        Ok(view)
    }

    fn check_tree(&self) -> Result<(), TagError> {
        let n = self.heads.len();
        let roots: Vec<usize> = (1..=n).filter(|&i| self.head(i) == 0).collect();
        if n > 0 && roots.len() != 1 {
            return Err(TagError::MalformedTree(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        for start in 1..=n {
            let mut cur = start;
            for _ in 0..=n {
                cur = self.head(cur);
                if cur == 0 {
                    break;
                }
            }
            if cur != 0 {
                return Err(TagError::MalformedTree(format!(
                    "head links from token {start} form a cycle"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn head(&self, index: usize) -> usize {
        self.heads[index - 1]
    }

    pub fn upos(&self, index: usize) -> Upos {
        self.upos[index - 1]
    }

    pub fn deprel(&self, index: usize) -> &str {
        self.deprels[index - 1]
    }

    pub fn children(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (1..=self.len()).filter(move |&c| self.head(c) == index)
    }

    /// True when `ancestor` lies strictly above `index` on its path to the root.
    pub fn dominates(&self, ancestor: usize, index: usize) -> bool {
        let mut cur = self.head(index);
        while cur != 0 {
            if cur == ancestor {
                return true;
            }
            cur = self.head(cur);
        }
        false
    }

    /// Every arc spans only descendants of its head.
    pub fn is_projective(&self) -> bool {
        (1..=self.len()).all(|dep| {
            let head = self.head(dep);
            if head == 0 {
                return true;
            }
            let (lo, hi) = if head < dep { (head, dep) } else { (dep, head) };
            (lo + 1..hi).all(|k| self.dominates(head, k))
        })
    }
}

/// The member that dominates all other members, if any.
pub fn find_head(m: &MweInstance, d: &DepView) -> Option<usize> {
    m.token_indices().iter().copied().find(|&cand| {
        m.token_indices()
            .iter()
            .all(|&other| other == cand || d.dominates(cand, other))
    })
}

fn is_nominal_subject(deprel: &str) -> bool {
    deprel == "nsubj" || deprel.starts_with("nsubj:") || deprel == "nsubjpass"
}

fn is_relative_clause(deprel: &str) -> bool {
    matches!(deprel, "acl:relcl" | "relcl" | "acl")
}

pub fn tag_type(m: &MweInstance, d: &DepView) -> MweType {
    let Some(head) = find_head(m, d) else {
        return MweType::Other;
    };
    let member_children = || d.children(head).filter(|c| m.contains(*c));
    match d.upos(head) {
        Upos::NOUN | Upos::PRON | Upos::PROPN => {
            let relcl = member_children()
                .any(|c| d.upos(c) == Upos::VERB && is_relative_clause(d.deprel(c)));
            if relcl {
                MweType::Verb
            } else {
                MweType::Noun
            }
        }
        Upos::VERB | Upos::AUX => {
            if member_children().any(|c| is_nominal_subject(d.deprel(c))) {
                MweType::Clause
            } else {
                MweType::Verb
            }
        }
        Upos::ADP | Upos::ADJ | Upos::ADV | Upos::CCONJ | Upos::SCONJ => MweType::ModConn,
        _ => MweType::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TagIssue {
    /// The sentence was left unchanged.
    MissingParse { index: usize, field: String },
    /// Untyped MWEs were tagged `Other`.
    MalformedTree { reason: String },
    /// Tagging proceeded normally.
    NonProjective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagDiagnostic {
    pub sentence_id: String,
    #[serde(flatten)]
    pub issue: TagIssue,
}

impl fmt::Display for TagDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentence {}: ", self.sentence_id)?;
        match &self.issue {
            TagIssue::MissingParse { index, field } => {
                write!(f, "token {index} has no {field}; MWEs left untyped")
            }
            TagIssue::MalformedTree { reason } => {
                write!(f, "{reason}; MWEs tagged OTHER")
            }
            TagIssue::NonProjective => write!(f, "non-projective tree (warning)"),
        }
    }
}

/// Fills in MWE types. Existing types are kept unless `force` is set.
pub fn tag_sentence(s: &Sentence, force: bool) -> Result<(Sentence, Vec<TagDiagnostic>), ModelError> {
    let needs = |m: &MweInstance| force || m.mwe_type().is_none();
    if !s.mwes().iter().any(needs) {
        return Ok((s.clone(), Vec::new()));
    }
    let mut diagnostics = Vec::new();
    let diag = |issue| TagDiagnostic {
        sentence_id: s.id().to_string(),
        issue,
    };
    let view = match DepView::new(s) {
        Ok(view) => {
            if !view.is_projective() {
                diagnostics.push(diag(TagIssue::NonProjective));
            }
            Some(view)
        }
        Err(TagError::MissingParse { index, field }) => {
            diagnostics.push(diag(TagIssue::MissingParse {
                index,
                field: field.to_string(),
            }));
            return Ok((s.clone(), diagnostics));
        }
        Err(TagError::MalformedTree(reason)) => {
            diagnostics.push(diag(TagIssue::MalformedTree { reason }));
            None
        }
    };
    let mwes = s
        .mwes()
        .iter()
        .map(|m| {
            if needs(m) {
                m.clone().with_type(Some(view.as_ref().map_or(MweType::Other, |v| tag_type(m, v))))
            } else {
                m.clone()
            }
        })
        .collect();
    Ok((s.clone().with_mwes(mwes)?, diagnostics))
}

#[derive(Debug, Clone)]
pub struct TagOutcome {
    pub corpus: Corpus,
    pub diagnostics: Vec<TagDiagnostic>,
}

pub fn tag_corpus(c: &Corpus, force: bool) -> Result<TagOutcome, ModelError> {
    let tagged: Vec<(Sentence, Vec<TagDiagnostic>)> = c
        .sentences()
        .par_iter()
        .map(|s| tag_sentence(s, force))
        .collect::<Result<_, _>>()?;
    let mut diagnostics = Vec::new();
    let mut sentences = Vec::with_capacity(tagged.len());
    for (s, d) in tagged {
        diagnostics.extend(d);
        sentences.push(s);
    }
    let mut sentences = sentences.into_iter();
    let corpus = c.map_sentences(|_| Ok::<_, ModelError>(sentences.next().expect("one per sentence")))?;
    Ok(TagOutcome { corpus, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MweSource, Token};

    /// (surface, upos, head, deprel)
    fn parsed(id: &str, rows: &[(&str, Upos, usize, &str)]) -> Sentence {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (w, p, h, r))| {
                Token::new(i + 1, *w)
                    .with_lemma(w.to_lowercase())
                    .with_upos(*p)
                    .with_dep(*h, *r)
            })
            .collect();
        Sentence::new(id, tokens).unwrap()
    }

    fn mwe(ix: &[usize]) -> MweInstance {
        MweInstance::new(ix.to_vec(), MweSource::Gold).unwrap()
    }

    fn tag(s: &Sentence, ix: &[usize]) -> MweType {
        tag_type(&mwe(ix), &DepView::new(s).unwrap())
    }

    use Upos::*;

    #[test]
    fn stands_for_is_verb() {
        let s = parsed(
            "a",
            &[
                ("The", DET, 2, "det"),
                ("expression", NOUN, 3, "nsubj"),
                ("stands", VERB, 0, "root"),
                ("for", ADP, 3, "prep"),
                ("something", PRON, 4, "pobj"),
            ],
        );
        assert_eq!(find_head(&mwe(&[3, 4]), &DepView::new(&s).unwrap()), Some(3));
        assert_eq!(tag(&s, &[3, 4]), MweType::Verb);
    }

    #[test]
    fn when_it_comes_to_is_clause() {
        let s = parsed(
            "b",
            &[
                ("when", SCONJ, 3, "advmod"),
                ("it", PRON, 3, "nsubj"),
                ("comes", VERB, 0, "root"),
                ("to", ADP, 3, "prep"),
                ("climate", NOUN, 6, "compound"),
                ("change", NOUN, 4, "pobj"),
            ],
        );
        assert_eq!(tag(&s, &[1, 2, 3, 4]), MweType::Clause);
        assert_eq!(tag(&s, &[1, 3, 4]), MweType::Verb);
    }

    #[test]
    fn middle_of_nowhere_is_noun() {
        let s = parsed(
            "c",
            &[
                ("born", VERB, 0, "root"),
                ("in", ADP, 1, "prep"),
                ("the", DET, 4, "det"),
                ("middle", NOUN, 2, "pobj"),
                ("of", ADP, 4, "prep"),
                ("nowhere", ADV, 5, "pobj"),
            ],
        );
        assert_eq!(tag(&s, &[3, 4, 5, 6]), MweType::Noun);
    }

    #[test]
    fn price_he_pays_is_verb() {
        let s = parsed(
            "d",
            &[
                ("the", DET, 2, "det"),
                ("price", NOUN, 0, "root"),
                ("he", PRON, 4, "nsubj"),
                ("pays", VERB, 2, "acl:relcl"),
            ],
        );
        assert_eq!(tag(&s, &[2, 3, 4]), MweType::Verb);
        // The relative clause must be part of the MWE.
        assert_eq!(tag(&s, &[1, 2]), MweType::Noun);
    }

    #[test]
    fn at_least_is_modconn() {
        let s = parsed(
            "e",
            &[
                ("for", ADP, 0, "root"),
                ("at", ADP, 3, "advmod"),
                ("least", ADV, 4, "advmod"),
                ("two", NUM, 5, "nummod"),
                ("decades", NOUN, 1, "pobj"),
            ],
        );
        assert_eq!(tag(&s, &[2, 3]), MweType::ModConn);
    }

    #[test]
    fn de_facto_is_other() {
        let s = parsed(
            "f",
            &[
                ("de", X, 2, "fixed"),
                ("facto", X, 4, "amod"),
                ("target", NOUN, 4, "compound"),
                ("gauge", NOUN, 0, "root"),
            ],
        );
        assert_eq!(tag(&s, &[1, 2]), MweType::Other);
    }

    #[test]
    fn and_so_on_without_internal_head_is_other() {
        let s = parsed(
            "g",
            &[
                ("apples", NOUN, 0, "root"),
                (",", PUNCT, 1, "punct"),
                ("and", CCONJ, 1, "cc"),
                ("so", ADV, 1, "advmod"),
                ("on", ADV, 1, "conj"),
            ],
        );
        assert_eq!(find_head(&mwe(&[3, 4, 5]), &DepView::new(&s).unwrap()), None);
        assert_eq!(tag(&s, &[3, 4, 5]), MweType::Other);
    }

    #[test]
    fn tree_errors() {
        let cyc = Sentence::new(
            "h",
            vec![
                Token::new(1, "a").with_upos(NOUN).with_dep(2, "x"),
                Token::new(2, "b").with_upos(NOUN).with_dep(1, "x"),
                Token::new(3, "c").with_upos(VERB).with_dep(0, "root"),
            ],
        )
        .unwrap();
        assert!(matches!(DepView::new(&cyc), Err(TagError::MalformedTree(_))));
        let two_roots = parsed("i", &[("a", NOUN, 0, "root"), ("b", NOUN, 0, "root")]);
        assert!(matches!(DepView::new(&two_roots), Err(TagError::MalformedTree(_))));
        let bare = Sentence::new("j", vec![Token::new(1, "a"), Token::new(2, "b")]).unwrap();
        assert!(matches!(DepView::new(&bare), Err(TagError::MissingParse { index: 1, .. })));
    }

    #[test]
    fn sentence_level_handling() {
        let two_roots = parsed("i", &[("a", NOUN, 0, "root"), ("b", NOUN, 0, "root")])
            .with_mwe(mwe(&[1, 2]))
            .unwrap();
        let (out, diags) = tag_sentence(&two_roots, false).unwrap();
        assert_eq!(out.mwes()[0].mwe_type(), Some(MweType::Other));
        assert_eq!(diags.len(), 1);

        let bare = Sentence::new("j", vec![Token::new(1, "a"), Token::new(2, "b")])
            .unwrap()
            .with_mwe(mwe(&[1, 2]))
            .unwrap();
        let (out, diags) = tag_sentence(&bare, false).unwrap();
        assert_eq!(out.mwes()[0].mwe_type(), None);
        assert!(matches!(diags[0].issue, TagIssue::MissingParse { .. }));
    }

    #[test]
    fn non_projective_is_tagged_with_warning() {
        // 1 -> 3, 2 -> 4 crosses.
        let s = parsed(
            "k",
            &[
                ("a", ADV, 3, "advmod"),
                ("b", NOUN, 4, "obj"),
                ("c", VERB, 0, "root"),
                ("d", VERB, 3, "xcomp"),
            ],
        );
        let view = DepView::new(&s).unwrap();
        assert!(!view.is_projective());
        let s = s.with_mwe(mwe(&[2, 4])).unwrap();
        let (out, diags) = tag_sentence(&s, false).unwrap();
        assert_eq!(out.mwes()[0].mwe_type(), Some(MweType::Verb));
        assert_eq!(diags[0].issue, TagIssue::NonProjective);
    }

    #[test]
    fn manual_types_survive_without_force() {
        let s = parsed("l", &[("stands", VERB, 0, "root"), ("for", ADP, 1, "prep")])
            .with_mwe(mwe(&[1, 2]).with_type(Some(MweType::Other)))
            .unwrap();
        let c = Corpus::new(vec![s]).unwrap();
        let kept = tag_corpus(&c, false).unwrap();
        assert_eq!(kept.corpus, c);
        let forced = tag_corpus(&c, true).unwrap();
        assert_eq!(forced.corpus.sentences()[0].mwes()[0].mwe_type(), Some(MweType::Verb));
        assert!(tag_corpus(&Corpus::default(), false).unwrap().corpus.is_empty());
    }

    #[test]
    fn head_is_unique_on_trees() {
        let s = parsed(
            "m",
            &[
                ("when", SCONJ, 3, "advmod"),
                ("it", PRON, 3, "nsubj"),
                ("comes", VERB, 0, "root"),
                ("to", ADP, 3, "prep"),
            ],
        );
        let view = DepView::new(&s).unwrap();
        let subsets: [&[usize]; 4] = [&[1, 3], &[2, 3, 4], &[1, 2, 3, 4], &[3, 4]];
        for ix in subsets {
            let m = mwe(ix);
            let heads: Vec<usize> = ix
                .iter()
                .copied()
                .filter(|&h| ix.iter().all(|&o| o == h || view.dominates(h, o)))
                .collect();
            assert_eq!(heads.len(), 1);
            assert_eq!(find_head(&m, &view), Some(heads[0]));
        }
    }
}
