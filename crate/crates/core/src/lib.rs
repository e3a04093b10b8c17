//! Multiword expression corpus toolkit: CUPT and LLM exchange formats,
//! lexicon-based identification, dependency-based type tagging, exact-match
//! evaluation and consistency auditing.

pub mod consistency;
pub mod cupt;
pub mod eval;
pub mod identify;
pub mod lexicon;
pub mod llm;
pub mod model;
pub mod typetag;

pub use model::{Corpus, MissingLemma, ModelError, MweInstance, MweSource, MweType, Sentence, Token, Upos};
