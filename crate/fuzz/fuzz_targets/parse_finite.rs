#![no_main]

use libfuzzer_sys::fuzz_target;
use qtoeplitz::textio::{parse_finite, write_finite};

fuzz_target!(|text: &str| {
    if let Ok(a) = parse_finite(text) {
        assert_eq!(parse_finite(&write_finite(&a)).unwrap(), a);
    }
});
