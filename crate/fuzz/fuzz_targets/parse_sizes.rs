#![no_main]

use libfuzzer_sys::fuzz_target;
use qt_bench::parse_sizes;

fuzz_target!(|text: &str| {
    if let Ok(sizes) = parse_sizes(text) {
        assert!(!sizes.is_empty());
        let joined: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_sizes(&joined.join(",")).unwrap(), sizes);
    }
});
