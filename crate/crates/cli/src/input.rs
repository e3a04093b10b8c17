use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use mwekit_core::cupt::{read_cupt_located, ColumnLayout, CuptError, ReadOptions};
use mwekit_core::lexicon::{load_lexicon, Lexicon, LexiconError};
use mwekit_core::Corpus;

use crate::CliError;

/// A corpus together with where each sentence came from.
pub struct Loaded {
    pub name: String,
    pub corpus: Corpus,
    lines: HashMap<String, usize>,
}

impl Loaded {
    /// `file:line` of a sentence's first line.
    pub fn locate(&self, sentence_id: &str) -> String {
        match self.lines.get(sentence_id) {
            Some(line) => format!("{}:{line}", self.name),
            None => self.name.clone(),
        }
    }
}

fn display_name(path: &str) -> String {
    if path == "-" {
        "<stdin>".to_string()
    } else {
        path.to_string()
    }
}

fn open(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        return Ok(Box::new(BufReader::new(io::stdin().lock())));
    }
    let f = File::open(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_corpus(path: &str, cupt11: bool) -> Result<Loaded, CliError> {
    let name = display_name(path);
    let opts = ReadOptions {
        layout: if cupt11 {
            ColumnLayout::Cupt11
        } else {
            ColumnLayout::Seven
        },
        ..ReadOptions::default()
    };
    let (corpus, starts) = read_cupt_located(open(path)?, &opts).map_err(|e| match e {
        CuptError::Parse { line, reason } => CliError::Data(format!("{name}:{line}: {reason}")),
        CuptError::Io(e) => CliError::Data(format!("{name}: {e}")),
    })?;
    let lines = corpus
        .sentences()
        .iter()
        .zip(starts)
        .map(|(s, line)| (s.id().to_string(), line))
        .collect();
    Ok(Loaded { name, corpus, lines })
}

/// Rejects more than one stdin among `paths` before anything is read.
pub fn check_single_stdin<'a>(paths: impl IntoIterator<Item = &'a str>) -> Result<(), CliError> {
    if paths.into_iter().filter(|p| *p == "-").count() > 1 {
        return Err(CliError::Usage("stdin (-) can be read only once".into()));
    }
    Ok(())
}

pub fn read_lexicon(path: &Path) -> Result<Lexicon, CliError> {
    let name = path.display();
    let f = File::open(path).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
    load_lexicon(BufReader::new(f)).map_err(|e| match e {
        LexiconError::Parse { line, reason } => CliError::Data(format!("{name}:{line}: {reason}")),
        LexiconError::Io(e) => CliError::Data(format!("{name}: {e}")),
    })
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(s)
}

pub fn create(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

pub fn write_err(e: io::Error) -> CliError {
    CliError::Data(format!("write failed: {e}"))
}
