#![no_main]

use libfuzzer_sys::fuzz_target;
use mwekit_core::cupt::{read_cupt_str, read_cupt_with, to_cupt_string, ColumnLayout, ReadOptions};

fuzz_target!(|data: &[u8]| {
    let opts = ReadOptions {
        layout: ColumnLayout::Cupt11,
        ..ReadOptions::default()
    };
    let Ok(corpus) = read_cupt_with(data, &opts) else { return };
    let again = read_cupt_str(&to_cupt_string(&corpus)).expect("written corpus reads back");
    assert_eq!(again, corpus);
});
