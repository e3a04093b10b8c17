#![no_main]

use libfuzzer_sys::fuzz_target;
use mwekit_core::lexicon::{load_lexicon, MatchKey};

fuzz_target!(|data: &[u8]| {
    let Ok(lex) = load_lexicon(data) else { return };
    for e in lex.entries() {
        assert!(e.len() >= 2);
        assert!(lex.contains(e.lemmas(), MatchKey::Sequence));
        assert!(lex.contains(e.lemmas(), MatchKey::Multiset));
    }
    let mut out = Vec::new();
    lex.write(&mut out).unwrap();
    let again = load_lexicon(out.as_slice()).expect("written lexicon reads back");
    assert_eq!(again.len(), lex.len());
});
