//! Plain-text file formats.
//!
//! Matrix files: a header line `rows cols`, then one line per row holding
//! `2·cols` whitespace-separated decimals interleaved as `re im re im …`.
//! Floats are written with Rust's shortest round-trip rendering, so a
//! write/read cycle is bit-exact.
//!
//! Key/value files (`instance.meta`, `solve.meta`, sweep configs): one
//! `key = value` pair per line, `#` starts a comment, blank lines ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Upper bound on `rows × cols` accepted by the parser.
pub const MAX_PARSE_ENTRIES: usize = 1 << 26;

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::with_capacity(16 + m.rows() * m.cols() * 40);
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let mut first = true;
        for z in m.row(r) {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{} {}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
    let mut dims = header.split_whitespace();
    let mut dim = |name: &str| -> Result<usize> {
        let tok = dims
            .next()
            .ok_or_else(|| parse_err(hline, format!("missing {name} in header")))?;
        let v: usize = tok
            .parse()
            .map_err(|_| parse_err(hline, format!("invalid {name} `{tok}`")))?;
        if v == 0 {
            return Err(parse_err(hline, format!("{name} must be positive")));
        }
        Ok(v)
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    if dims.next().is_some() {
        return Err(parse_err(hline, "trailing tokens in header"));
    }
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_PARSE_ENTRIES => {}
        _ => return Err(parse_err(hline, "matrix too large")),
    }

    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline + r + 1, format!("expected {rows} rows, found {r}")))?;
        let mut count = 0usize;
        let mut pending_re: Option<f64> = None;
        for tok in line.split_whitespace() {
            let v = f64::from_str(tok).map_err(|_| parse_err(lineno, format!("invalid number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value `{tok}`")));
            }
            count += 1;
            if count > 2 * cols {
                return Err(parse_err(lineno, format!("expected {} values", 2 * cols)));
            }
            match pending_re.take() {
                None => pending_re = Some(v),
                Some(re) => data.push(C64::new(re, v)),
            }
        }
        if count != 2 * cols {
            return Err(parse_err(
                lineno,
                format!("expected {} values, found {count}", 2 * cols),
            ));
        }
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(parse_err(lineno, "trailing content after last row"));
    }
    ComplexMatrix::from_vec(rows, cols, data)
}

pub fn write_matrix_file(path: &Path, m: &ComplexMatrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Ordered `key = value` map. Keys are unique.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Domain(format!("missing key `{key}`")))
    }

    /// Parses the value under `key`, if present.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Domain(format!("invalid value `{v}` for key `{key}`"))),
        }
    }

    pub fn parse_req<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_opt(key)?
            .ok_or_else(|| Error::Domain(format!("missing key `{key}`")))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut kv = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(parse_err(lineno, format!("invalid key `{key}`")));
        }
        if kv.entries.contains_key(key) {
            return Err(parse_err(lineno, format!("duplicate key `{key}`")));
        }
        kv.entries.insert(key.to_string(), value.trim().to_string());
    }
    Ok(kv)
}

/// Splits a comma-separated list, dropping surrounding whitespace and empty items.
pub fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
