#![no_main]

use fairshift::harness::{parse_kv, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(kv) = parse_kv(text) else {
        return;
    };
    let mut cfg = ExperimentConfig::default();
    if cfg.apply(&kv).is_ok() && cfg.validate().is_ok() {
        let mut again = ExperimentConfig::default();
        let round: std::collections::BTreeMap<_, _> = cfg.to_kv().into_iter().collect();
        again.apply(&round).expect("emitted settings parse");
        assert_eq!(again.to_kv(), cfg.to_kv());
    }
});
