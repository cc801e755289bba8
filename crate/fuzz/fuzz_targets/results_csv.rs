#![no_main]

use fairshift::harness::{parse_bound_csv, parse_results_csv, summarize};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_results_csv(data, "fuzz") {
        let _ = summarize(&rows);
    }
    let _ = parse_bound_csv(data, "fuzz");
});
