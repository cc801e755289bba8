#![no_main]

use fairshift::model::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(params) = decode_checkpoint(text) {
        let again =
            decode_checkpoint(&encode_checkpoint(&params)).expect("re-encoded checkpoint decodes");
        assert_eq!(again, params);
    }
});
