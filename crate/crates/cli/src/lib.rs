//! Experiment runners behind the `qt-bench` binary, plus the small text
//! helpers it needs. Each runner returns one CSV row.

pub mod experiments;

use std::fmt::Display;

/// Parses a comma-separated list of sizes such as `256,512,1024`.
/// Blank entries around commas are rejected, as is an empty list.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty size list".into());
    }
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>().map_err(|_| format!("bad size '{t}'"))
        })
        .collect()
}

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn csv_line(fields: &[&dyn Display]) -> String {
    let parts: Vec<String> = fields.iter().map(|f| f.to_string()).collect();
    parts.join(",")
}
