#![no_main]

use libfuzzer_sys::fuzz_target;
use mwekit_core::llm::parse_llm_output;
use mwekit_core::{Sentence, Token};

const WORDS: [&str; 8] = ["Give", "it", "a", "try", "at", "least", "once", "up"];

// first byte picks the sentence length, the rest is the model answer
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let tokens = (0..(n as usize % 12))
        .map(|i| Token::new(i + 1, WORDS[i % WORDS.len()]))
        .collect();
    let sentence = Sentence::new("s", tokens).unwrap();
    let parsed = parse_llm_output(text, &sentence);
    for m in &parsed.instances {
        let ix = m.token_indices();
        assert!(ix.len() >= 2);
        assert!(ix.windows(2).all(|w| w[0] < w[1]));
        assert!(ix.iter().all(|&i| i >= 1 && i <= sentence.len()));
    }
});
