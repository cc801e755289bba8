#![no_main]

use fairshift::data::{parse_compas, CompasOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = parse_compas(data, CompasOptions { label_threshold: 5 }) {
        assert!(!d.dataset.is_empty());
    }
});
