// Runs the checked-in fuzz seeds through the parsers on stable.
use std::fs;
use std::path::PathBuf;

use qtoeplitz::textio::{parse, parse_finite, parse_qt, write_finite, write_qt};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = String::from_utf8_lossy(&fs::read(&p).unwrap()).into_owned();
            (p.file_name().unwrap().to_string_lossy().into_owned(), text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn semi_infinite_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("parse_qt") {
        if let Ok(a) = parse_qt(&text) {
            assert_eq!(parse_qt(&write_qt(&a)).unwrap(), a, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn finite_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("parse_finite") {
        if let Ok(a) = parse_finite(&text) {
            assert_eq!(parse_finite(&write_finite(&a)).unwrap(), a, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn generic_seeds() {
    let results: Vec<bool> = seeds("parse_text")
        .iter()
        .map(|(_, t)| parse(t).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}
