#![no_main]

use libfuzzer_sys::fuzz_target;
use mwekit_core::cupt::{read_cupt, read_cupt_str, to_cupt_string};

fuzz_target!(|data: &[u8]| {
    let Ok(corpus) = read_cupt(data) else { return };
    let text = to_cupt_string(&corpus);
    let again = read_cupt_str(&text).expect("written corpus reads back");
    assert_eq!(again, corpus);
});
