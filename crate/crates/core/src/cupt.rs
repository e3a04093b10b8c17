//! Reader and writer for the seven-column CUPT layout:
//!
//! ```text
//! ID  FORM  LEMMA  UPOS  HEAD  DEPREL  MWE
//! ```
//!
//! Sentences are separated by blank lines. Comment lines start with `#` and
//! carry `key = value` pairs: `sent_id`, `flag` (e.g. `unclear`), `mwe_source`
//! (`N:source` for instances not taken from gold), `global.*` for corpus-level
//! metadata, and anything else as sentence metadata.
//!
//! The MWE column is `*` for no membership or a `;`-joined list of MWE numbers,
//! local to the sentence. The first member row of a typed MWE carries the type
//! as a suffix, e.g. `1:VERB;2`. `_` is accepted as "no membership" on read.
//!
//! The eleven-column PARSEME layout can be read with [`ColumnLayout::Cupt11`];
//! XPOS, FEATS, DEPS and MISC are ignored, as are multiword-token ranges and
//! empty nodes, and MWE categories that are not one of the five types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::{
    Corpus, ModelError, MweInstance, MweSource, MweType, Sentence, Token, Upos,
};

#[derive(Debug, Error)]
pub enum CuptError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CuptError {
    fn at(line: usize, reason: impl Into<String>) -> Self {
        CuptError::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            CuptError::Parse { line, .. } => Some(*line),
            CuptError::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnLayout {
    #[default]
    Seven,
    Cupt11,
}

impl ColumnLayout {
    fn width(self) -> usize {
        match self {
            ColumnLayout::Seven => 7,
            ColumnLayout::Cupt11 => 11,
        }
    }

    /// Column positions of (HEAD, DEPREL, MWE).
    fn positions(self) -> (usize, usize, usize) {
        match self {
            ColumnLayout::Seven => (4, 5, 6),
            ColumnLayout::Cupt11 => (6, 7, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadOptions {
    pub layout: ColumnLayout,
    /// Source given to MWEs without a `mwe_source` comment.
    pub default_source: MweSource,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            layout: ColumnLayout::Seven,
            default_source: MweSource::Gold,
        }
    }
}

pub fn read_cupt<R: BufRead>(reader: R) -> Result<Corpus, CuptError> {
    read_cupt_with(reader, &ReadOptions::default())
}

pub fn read_cupt_str(text: &str) -> Result<Corpus, CuptError> {
    read_cupt(text.as_bytes())
}

pub fn read_cupt_with<R: BufRead>(reader: R, opts: &ReadOptions) -> Result<Corpus, CuptError> {
    read_cupt_located(reader, opts).map(|(c, _)| c)
}

/// Like [`read_cupt_with`], also returning the first line of each sentence
/// block, in corpus order.
pub fn read_cupt_located<R: BufRead>(reader: R, opts: &ReadOptions) -> Result<(Corpus, Vec<usize>), CuptError> {
    let mut parser = Parser {
        opts,
        sentences: Vec::new(),
        starts: Vec::new(),
        ids: BTreeSet::new(),
        corpus_meta: BTreeMap::new(),
        block: Block::default(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        parser.line(i + 1, line)?;
    }
    parser.flush()?;

    let mut corpus = Corpus::new(parser.sentences)
        .map_err(|e| CuptError::at(0, format!("invalid corpus: {e}")))?;
    for (k, v) in parser.corpus_meta {
        corpus = corpus
            .with_metadata(k, v)
            .map_err(|e| CuptError::at(0, e.to_string()))?;
    }
    Ok((corpus, parser.starts))
}

#[derive(Default)]
struct Block {
    start_line: usize,
    sent_id: Option<String>,
    flags: Vec<String>,
    metadata: Vec<(String, String)>,
    sources: Vec<(usize, usize, String)>,
    rows: Vec<Row>,
}

struct Row {
    line: usize,
    token: Token,
    /// (MWE number, optional type label)
    memberships: Vec<(usize, Option<String>)>,
}

struct Parser<'a> {
    opts: &'a ReadOptions,
    sentences: Vec<Sentence>,
    starts: Vec<usize>,
    ids: BTreeSet<String>,
    corpus_meta: BTreeMap<String, String>,
    block: Block,
}

impl Parser<'_> {
    fn line(&mut self, lineno: usize, line: &str) -> Result<(), CuptError> {
        if line.trim().is_empty() {
            return self.flush();
        }
        if self.block.start_line == 0 {
            self.block.start_line = lineno;
        }
        if let Some(comment) = line.strip_prefix('#') {
            self.comment(lineno, comment)
        } else {
            self.row(lineno, line)
        }
    }

    fn comment(&mut self, lineno: usize, comment: &str) -> Result<(), CuptError> {
        let Some((key, value)) = comment.split_once('=') else {
            return Ok(());
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "sent_id" => {
                if value.is_empty() {
                    return Err(CuptError::at(lineno, "empty sent_id"));
                }
                self.block.sent_id = Some(value.to_string());
            }
            "flag" => self.block.flags.push(value.to_string()),
            "mwe_source" => {
                let (num, src) = value
                    .split_once(':')
                    .ok_or_else(|| CuptError::at(lineno, "mwe_source must be N:source"))?;
                let num = parse_mwe_number(num.trim())
                    .ok_or_else(|| CuptError::at(lineno, format!("bad MWE number {num:?}")))?;
                self.block
                    .sources
                    .push((lineno, num, src.trim().to_string()));
            }
            "global.columns" => {}
            _ => match key.strip_prefix("global.") {
                Some(k) => {
                    self.corpus_meta.insert(k.to_string(), value.to_string());
                }
                None => self
                    .block
                    .metadata
                    .push((key.to_string(), value.to_string())),
            },
        }
        Ok(())
    }

    fn row(&mut self, lineno: usize, line: &str) -> Result<(), CuptError> {
        let layout = self.opts.layout;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != layout.width() {
            return Err(CuptError::at(
                lineno,
                format!("expected {} columns, found {}", layout.width(), cols.len()),
            ));
        }
        if layout == ColumnLayout::Cupt11 && cols[0].contains(['-', '.']) {
            // multiword token range or empty node
            return Ok(());
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| CuptError::at(lineno, format!("non-numeric ID {:?}", cols[0])))?;
        let expected = self.block.rows.len() + 1;
        if index != expected {
            return Err(CuptError::at(
                lineno,
                format!("ID {index} out of sequence, expected {expected}"),
            ));
        }
        let (head_col, deprel_col, mwe_col) = layout.positions();
        let optional = |s: &str| (s != "_").then(|| s.to_string());

        let mut token = Token::new(index, cols[1]);
        token.lemma = optional(cols[2]);
        token.upos = match cols[3] {
            "_" => None,
            tag => Some(
                tag.parse::<Upos>()
                    .map_err(|e| CuptError::at(lineno, e.to_string()))?,
            ),
        };
        token.head = match cols[head_col] {
            "_" => None,
            h => Some(
                h.parse()
                    .map_err(|_| CuptError::at(lineno, format!("non-numeric HEAD {h:?}")))?,
            ),
        };
        token.deprel = optional(cols[deprel_col]);

        let memberships = parse_mwe_cell(cols[mwe_col])
            .map_err(|reason| CuptError::at(lineno, format!("MWE column: {reason}")))?;
        self.block.rows.push(Row {
            line: lineno,
            token,
            memberships,
        });
        Ok(())
    }

    fn flush(&mut self) -> Result<(), CuptError> {
        let block = std::mem::take(&mut self.block);
        if block.rows.is_empty() && block.sent_id.is_none() {
            // blank run, free comments, or a corpus-metadata header
            return Ok(());
        }
        let start = block.start_line;
        let id = block
            .sent_id
            .clone()
            .unwrap_or_else(|| (self.sentences.len() + 1).to_string());
        if !self.ids.insert(id.clone()) {
            return Err(CuptError::at(start, format!("duplicate sent_id {id:?}")));
        }
        let len = block.rows.len();
        for row in &block.rows {
            if let Some(head) = row.token.head {
                if head > len || head == row.token.index {
                    return Err(CuptError::at(
                        row.line,
                        format!("HEAD {head} out of range for a sentence of {len} tokens"),
                    ));
                }
            }
        }

        let mwes = self.collect_mwes(&block)?;
        let model_err = |line: usize| move |e: ModelError| CuptError::at(line, e.to_string());
        let mut sentence = Sentence::new(id, block.rows.into_iter().map(|r| r.token).collect())
            .map_err(model_err(start))?
            .with_mwes(mwes)
            .map_err(model_err(start))?;
        for flag in block.flags {
            sentence = sentence.with_flag(flag).map_err(model_err(start))?;
        }
        for (k, v) in block.metadata {
            sentence = sentence.with_metadata(k, v).map_err(model_err(start))?;
        }
        self.sentences.push(sentence);
        self.starts.push(start);
        Ok(())
    }

    fn collect_mwes(&self, block: &Block) -> Result<Vec<MweInstance>, CuptError> {
        // number -> (member indices, type label, first line seen)
        let mut groups: BTreeMap<usize, (Vec<usize>, Option<String>, usize)> = BTreeMap::new();
        for row in &block.rows {
            for (num, label) in &row.memberships {
                let entry = groups
                    .entry(*num)
                    .or_insert_with(|| (Vec::new(), None, row.line));
                entry.0.push(row.token.index);
                if let Some(label) = label {
                    match &entry.1 {
                        Some(prev) if prev != label => {
                            return Err(CuptError::at(
                                row.line,
                                format!("MWE {num} has conflicting types {prev:?} and {label:?}"),
                            ));
                        }
                        _ => entry.1 = Some(label.clone()),
                    }
                }
            }
        }

        let mut sources: BTreeMap<usize, MweSource> = BTreeMap::new();
        for (line, num, src) in &block.sources {
            if !groups.contains_key(num) {
                return Err(CuptError::at(*line, format!("mwe_source for unknown MWE {num}")));
            }
            let src = src
                .parse()
                .map_err(|e: crate::model::ParseMweSourceError| CuptError::at(*line, e.to_string()))?;
            sources.insert(*num, src);
        }

        let mut mwes = Vec::with_capacity(groups.len());
        for (num, (indices, label, line)) in groups {
            if indices.len() < 2 {
                return Err(CuptError::at(
                    line,
                    format!("MWE {num} appears on a single token"),
                ));
            }
            let mwe_type = match label {
                None => None,
                Some(label) => match (label.parse::<MweType>(), self.opts.layout) {
                    (Ok(t), _) => Some(t),
                    (Err(_), ColumnLayout::Cupt11) => None,
                    (Err(e), ColumnLayout::Seven) => return Err(CuptError::at(line, e.to_string())),
                },
            };
            let source = sources
                .remove(&num)
                .unwrap_or_else(|| self.opts.default_source.clone());
            let m = MweInstance::new(indices, source)
                .map_err(|e| CuptError::at(line, e.to_string()))?
                .with_type(mwe_type);
            mwes.push(m);
        }
        Ok(mwes)
    }
}

fn parse_mwe_number(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok().filter(|&n| n > 0)
}

fn parse_mwe_cell(cell: &str) -> Result<Vec<(usize, Option<String>)>, String> {
    if cell == "*" || cell == "_" {
        return Ok(Vec::new());
    }
    let mut out: Vec<(usize, Option<String>)> = Vec::new();
    for part in cell.split(';') {
        let (num, label) = match part.split_once(':') {
            Some((n, l)) if !l.is_empty() => (n, Some(l.to_string())),
            Some(_) => return Err(format!("empty type label in {part:?}")),
            None => (part, None),
        };
        let num = parse_mwe_number(num).ok_or_else(|| format!("bad MWE number {num:?}"))?;
        if out.iter().any(|(n, _)| *n == num) {
            return Err(format!("MWE {num} listed twice"));
        }
        out.push((num, label));
    }
    Ok(out)
}

/// Writes the corpus in the seven-column layout. MWEs are numbered per
/// sentence in order of their first token.
pub fn write_cupt<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    out.write_all(to_cupt_string(corpus).as_bytes())
}

pub fn to_cupt_string(corpus: &Corpus) -> String {
    let mut buf = String::new();
    if !corpus.metadata().is_empty() {
        for (k, v) in corpus.metadata() {
            let _ = writeln!(buf, "# global.{k} = {v}");
        }
        buf.push('\n');
    }
    for sentence in corpus.sentences() {
        write_sentence(sentence, &mut buf);
    }
    buf
}

fn write_sentence(sentence: &Sentence, buf: &mut String) {
    let _ = writeln!(buf, "# sent_id = {}", sentence.id());
    for (k, v) in sentence.metadata() {
        let _ = writeln!(buf, "# {k} = {v}");
    }
    for flag in sentence.flags() {
        let _ = writeln!(buf, "# flag = {flag}");
    }
    for (n, m) in sentence.mwes().iter().enumerate() {
        if *m.source() != MweSource::Gold {
            let _ = writeln!(buf, "# mwe_source = {}:{}", n + 1, m.source());
        }
    }

    let cells = mwe_cells(sentence);
    for (token, cell) in sentence.tokens().iter().zip(cells) {
        let field = |v: &Option<String>| v.clone().unwrap_or_else(|| "_".to_string());
        let _ = writeln!(
            buf,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            token.index,
            token.surface,
            field(&token.lemma),
            token.upos.map_or("_", |u| u.as_str()),
            token.head.map_or_else(|| "_".to_string(), |h| h.to_string()),
            field(&token.deprel),
            cell
        );
    }
    buf.push('\n');
}

/// Renders the MWE column for every token of the sentence.
pub fn mwe_cells(sentence: &Sentence) -> Vec<String> {
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); sentence.len()];
    for (n, m) in sentence.mwes().iter().enumerate() {
        for (k, &i) in m.token_indices().iter().enumerate() {
            let mut entry = (n + 1).to_string();
            if k == 0 {
                if let Some(t) = m.mwe_type() {
                    entry.push(':');
                    entry.push_str(t.label());
                }
            }
            cells[i - 1].push(entry);
        }
    }
    cells
        .into_iter()
        .map(|c| if c.is_empty() { "*".to_string() } else { c.join(";") })
        .collect()
}
