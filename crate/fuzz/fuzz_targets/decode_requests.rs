#![no_main]

use libfuzzer_sys::fuzz_target;
use mwekit_service::state::{decode_decision, decode_finalize, decode_submission, rows_to_mwes};

fuzz_target!(|data: &[u8]| {
    if let Ok(req) = decode_submission(data) {
        if let Ok(mwes) = rows_to_mwes(&req.rows, 16, Some(16)) {
            assert!(mwes.iter().all(|m| m.len() >= 2 && m.windows(2).all(|w| w[0] < w[1])));
        }
    }
    let _ = decode_finalize(data);
    let _ = decode_decision(data);
});
