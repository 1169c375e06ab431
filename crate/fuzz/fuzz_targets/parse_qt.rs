#![no_main]

use libfuzzer_sys::fuzz_target;
use qtoeplitz::textio::{parse_qt, write_qt};

fuzz_target!(|text: &str| {
    // anything accepted must survive a write and re-read unchanged
    if let Ok(a) = parse_qt(text) {
        assert_eq!(parse_qt(&write_qt(&a)).unwrap(), a);
    }
});
