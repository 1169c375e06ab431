//! Plain-text form of QT values.
//!
//! ```text
//! qtmatrix v1 semi-infinite          (or: qtmatrix v1 finite <n> <m>)
//! symbol <lowest> <count>
//! <count coefficients>
//! U <rows> <cols>
//! <entries, one matrix row per line>
//! V <rows> <cols>
//! ...
//! ```
//!
//! Finite values may add `W` and `Z` blocks for the bottom corner. Numbers
//! are written with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::correction::Correction;
use crate::error::{QtError, Result};
use crate::fqt::FiniteQtMatrix;
use crate::qt::QtMatrix;
use crate::symbol::LaurentSymbol;

/// Bound on indices and dimensions accepted by the parser.
const MAX_EXTENT: u64 = 1 << 40;

pub fn write_qt(a: &QtMatrix) -> String {
    let mut s = String::from("qtmatrix v1 semi-infinite\n");
    write_symbol(&mut s, a.symbol());
    write_pair(&mut s, a.correction(), "U", "V");
    s
}

pub fn write_finite(a: &FiniteQtMatrix) -> String {
    let mut s = format!("qtmatrix v1 finite {} {}\n", a.nrows(), a.ncols());
    write_symbol(&mut s, a.symbol());
    write_pair(&mut s, a.top(), "U", "V");
    if !a.bottom().is_zero() {
        write_pair(&mut s, a.bottom(), "W", "Z");
    }
    s
}

fn write_symbol(s: &mut String, a: &LaurentSymbol) {
    let lowest = if a.is_zero() { 0 } else { a.lowest() };
    let _ = writeln!(s, "symbol {} {}", lowest, a.len());
    for c in a.coeffs() {
        let _ = writeln!(s, "{c:.16e}");
    }
}

fn write_pair(s: &mut String, c: &Correction, first: &str, second: &str) {
    write_block(s, first, c.u());
    write_block(s, second, c.v());
}

fn write_block(s: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(s, "{name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
}

/// A value read by [`parse`].
#[derive(Clone, Debug, PartialEq)]
pub enum QtValue {
    SemiInfinite(QtMatrix),
    Finite(FiniteQtMatrix),
}

pub fn parse_qt(text: &str) -> Result<QtMatrix> {
    match parse(text)? {
        QtValue::SemiInfinite(a) => Ok(a),
        QtValue::Finite(_) => Err(QtError::Parse {
            line: 1,
            message: "expected a semi-infinite matrix".into(),
        }),
    }
}

pub fn parse_finite(text: &str) -> Result<FiniteQtMatrix> {
    match parse(text)? {
        QtValue::Finite(a) => Ok(a),
        QtValue::SemiInfinite(_) => Err(QtError::Parse {
            line: 1,
            message: "expected a finite matrix".into(),
        }),
    }
}

pub fn parse(text: &str) -> Result<QtValue> {
    let mut t = Tokens::new(text);
    t.keyword("qtmatrix")?;
    t.keyword("v1")?;
    let (line, kind) = t.next("matrix kind")?;
    let dims = match kind {
        "semi-infinite" => None,
        "finite" => Some((t.extent("row count")?, t.extent("column count")?)),
        other => return Err(err(line, format!("unknown matrix kind '{other}'"))),
    };
    t.keyword("symbol")?;
    let (line, tok) = t.next("lowest index")?;
    let lowest: i64 = tok
        .parse()
        .map_err(|_| err(line, format!("bad index '{tok}'")))?;
    if lowest.unsigned_abs() > MAX_EXTENT {
        return Err(err(line, "index out of range".into()));
    }
    let count = t.extent("coefficient count")?;
    let mut coeffs = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        coeffs.push(t.number()?);
    }
    let symbol = LaurentSymbol::new(lowest, coeffs);
    let top = t.pair("U", "V")?.unwrap_or_else(Correction::zero);
    match dims {
        None => {
            t.end()?;
            Ok(QtValue::SemiInfinite(QtMatrix::new(symbol, top)))
        }
        Some((n, m)) => {
            let bot = t.pair("W", "Z")?.unwrap_or_else(Correction::zero);
            t.end()?;
            let line = t.line;
            FiniteQtMatrix::new(symbol, top, bot, n, m)
                .map(QtValue::Finite)
                .map_err(|e| err(line, e.to_string()))
        }
    }
}

fn err(line: usize, message: String) -> QtError {
    QtError::Parse { line, message }
}

struct Tokens<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: std::str::SplitWhitespace<'a>,
    line: usize,
    peeked: Option<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            lines: text.lines().enumerate(),
            current: "".split_whitespace(),
            line: 0,
            peeked: None,
        }
    }

    fn raw(&mut self) -> Option<(usize, &'a str)> {
        if let Some(p) = self.peeked.take() {
            return Some(p);
        }
        loop {
            if let Some(tok) = self.current.next() {
                return Some((self.line, tok));
            }
            let (i, l) = self.lines.next()?;
            self.line = i + 1;
            self.current = l.split_whitespace();
        }
    }

    fn peek(&mut self) -> Option<(usize, &'a str)> {
        if self.peeked.is_none() {
            self.peeked = self.raw();
        }
        self.peeked
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.raw().ok_or_else(|| {
            err(
                self.line,
                format!("unexpected end of input, expected {what}"),
            )
        })
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let (line, tok) = self.next(word)?;
        if tok != word {
            return Err(err(line, format!("expected '{word}', found '{tok}'")));
        }
        Ok(())
    }

    fn extent(&mut self, what: &str) -> Result<usize> {
        let (line, tok) = self.next(what)?;
        let v: u64 = tok
            .parse()
            .map_err(|_| err(line, format!("bad {what} '{tok}'")))?;
        if v > MAX_EXTENT {
            return Err(err(line, format!("{what} {v} is too large")));
        }
        Ok(v as usize)
    }

    fn number(&mut self) -> Result<f64> {
        let (line, tok) = self.next("a number")?;
        match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(err(line, format!("bad number '{tok}'"))),
        }
    }

    fn block(&mut self, name: &str) -> Result<DMatrix<f64>> {
        self.keyword(name)?;
        let r = self.extent("row count")?;
        let c = self.extent("column count")?;
        let total = r.checked_mul(c).filter(|&t| t as u64 <= MAX_EXTENT);
        let total = total.ok_or_else(|| err(self.line, "block too large".into()))?;
        let mut data = Vec::with_capacity(total.min(1 << 16));
        for _ in 0..total {
            data.push(self.number()?);
        }
        Ok(DMatrix::from_row_slice(r, c, &data))
    }

    /// An optional pair of factor blocks introduced by `first`.
    fn pair(&mut self, first: &str, second: &str) -> Result<Option<Correction>> {
        match self.peek() {
            Some((_, tok)) if tok == first => {}
            _ => return Ok(None),
        }
        let u = self.block(first)?;
        let v = self.block(second)?;
        let line = self.line;
        Correction::new(u, v)
            .map(Some)
            .map_err(|e| err(line, e.to_string()))
    }

    fn end(&mut self) -> Result<()> {
        match self.raw() {
            None => Ok(()),
            Some((line, tok)) => Err(err(line, format!("unexpected trailing token '{tok}'"))),
        }
    }
}
