#![no_main]

use libfuzzer_sys::fuzz_target;

// First byte picks the split point between the train and test files.
fuzz_target!(|data: &[u8]| {
    let Some((&cut, rest)) = data.split_first() else {
        return;
    };
    let at = (cut as usize * rest.len()) / 256;
    let (train, test) = rest.split_at(at);
    if let Ok((a, b)) = fairshift::data::parse_adult(train, test) {
        assert_eq!(a.schema(), b.schema());
    }
});
