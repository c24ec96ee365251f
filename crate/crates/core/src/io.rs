//! Text formats: Matrix Market, dense CSV, band files, vectors and event streams.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! writer here reloads to bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{BidiagonalMatrix, DenseMatrix};
use crate::tracking::UpdateEvent;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

/// Non-empty lines that are not comments, with 1-based line numbers.
fn content_lines<'a>(
    text: &'a str,
    comment: &'a str,
) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with(comment))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Reads a real (or integer, or pattern) Matrix Market file in coordinate
/// or array layout.
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let words: Vec<String> = banner
        .split_whitespace()
        .map(|w| w.to_ascii_lowercase())
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'",
        ));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    let pattern = match words[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if coordinate => true,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let sym = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (sl, size) = body
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(
            sl,
            format!("size line needs {expected} integers"),
        ));
    }
    let m: usize = num(dims[0], sl, "row count")?;
    let n: usize = num(dims[1], sl, "column count")?;
    if m == 0 || n == 0 {
        return Err(parse_err(
            sl,
            "matrix must have at least one row and column",
        ));
    }
    if sym != Symmetry::General && m != n {
        return Err(parse_err(sl, "symmetric storage needs a square matrix"));
    }
    let mut a = DenseMatrix::zeros(m, n);
    if coordinate {
        let nnz: usize = num(dims[2], sl, "entry count")?;
        let mut seen = 0;
        let mut last = sl;
        for (ln, l) in body {
            last = ln;
            let f: Vec<&str> = l.split_whitespace().collect();
            let want = if pattern { 2 } else { 3 };
            if f.len() < want {
                return Err(parse_err(ln, format!("expected {want} fields")));
            }
            let i: usize = num(f[0], ln, "row index")?;
            let j: usize = num(f[1], ln, "column index")?;
            if i == 0 || i > m || j == 0 || j > n {
                return Err(parse_err(ln, format!("index ({i}, {j}) outside {m}x{n}")));
            }
            let v: f64 = if pattern {
                1.0
            } else {
                num(f[2], ln, "value")?
            };
            a[(i - 1, j - 1)] += v;
            if i != j {
                match sym {
                    Symmetry::General => {}
                    Symmetry::Symmetric => a[(j - 1, i - 1)] += v,
                    Symmetry::Skew => a[(j - 1, i - 1)] -= v,
                }
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                last,
                format!("header promises {nnz} entries, found {seen}"),
            ));
        }
    } else {
        let mut values = Vec::with_capacity(m * n);
        let mut last = sl;
        for (ln, l) in body {
            last = ln;
            for tok in l.split_whitespace() {
                values.push(num::<f64>(tok, ln, "value")?);
            }
        }
        // column-major; symmetric layouts list the lower triangle only
        let mut k = 0;
        for j in 0..n {
            let start = if sym == Symmetry::General { 0 } else { j };
            for i in start..m {
                let v = *values
                    .get(k)
                    .ok_or_else(|| parse_err(last, "too few values"))?;
                k += 1;
                a[(i, j)] = v;
                if i != j {
                    match sym {
                        Symmetry::General => {}
                        Symmetry::Symmetric => a[(j, i)] = v,
                        Symmetry::Skew => a[(j, i)] = -v,
                    }
                }
            }
        }
        if k != values.len() {
            return Err(parse_err(last, "too many values"));
        }
    }
    Ok(a)
}

/// General real array layout, column-major.
pub fn write_matrix_market(a: &DenseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let _ = writeln!(out, "{:e}", a[(i, j)]);
        }
    }
    out
}

/// Coordinate layout listing only the nonzero entries.
pub fn write_matrix_market_coordinate(a: &DenseMatrix) -> String {
    let entries: Vec<(usize, usize, f64)> = (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, a[(i, j)]))
        .filter(|e| e.2 != 0.0)
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.rows(), a.cols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

/// Dense CSV, one matrix row per line. Lines starting with `#` are skipped.
pub fn parse_csv_matrix(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, l) in content_lines(text, "#") {
        let row = l
            .split(',')
            .map(|t| num::<f64>(t.trim(), ln, "value"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    ln,
                    format!("expected {} values, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no rows"));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv_matrix(a: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Picks the reader from the contents: Matrix Market if the banner is
/// present, dense CSV otherwise.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(text)
    } else {
        parse_csv_matrix(text)
    }
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    parse_matrix(&read_text(path)?)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Band file: a `m n` line, then one `alpha beta` line per index (the last
/// line holds `alpha` only).
pub fn write_band(b: &BidiagonalMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", b.m, b.n);
    for (i, a) in b.alphas.iter().enumerate() {
        match b.betas.get(i) {
            Some(beta) => {
                let _ = writeln!(out, "{a:e} {beta:e}");
            }
            None => {
                let _ = writeln!(out, "{a:e}");
            }
        }
    }
    out
}

pub fn parse_band(text: &str) -> Result<BidiagonalMatrix> {
    let mut lines = content_lines(text, "#");
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing 'm n' header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(hl, "header must be 'm n'"));
    }
    let m: usize = num(dims[0], hl, "row count")?;
    let n: usize = num(dims[1], hl, "column count")?;
    let t = m.min(n);
    let mut alphas = Vec::with_capacity(t);
    let mut betas = Vec::with_capacity(t.saturating_sub(1));
    let mut last = hl;
    for (ln, l) in lines {
        last = ln;
        let f: Vec<&str> = l.split_whitespace().collect();
        let idx = alphas.len();
        let want = if idx + 1 < t { 2 } else { 1 };
        if idx >= t {
            return Err(parse_err(ln, format!("more than {t} band lines")));
        }
        if f.len() != want {
            return Err(parse_err(ln, format!("expected {want} values")));
        }
        alphas.push(num(f[0], ln, "alpha")?);
        if want == 2 {
            betas.push(num(f[1], ln, "beta")?);
        }
    }
    if alphas.len() != t {
        return Err(parse_err(
            last,
            format!("expected {t} band lines, found {}", alphas.len()),
        ));
    }
    BidiagonalMatrix::new(m, n, alphas, betas)
}

pub fn read_band(path: &Path) -> Result<BidiagonalMatrix> {
    parse_band(&read_text(path)?)
}

/// One value per line.
pub fn write_vector(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}\n")).collect()
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    content_lines(text, "#")
        .map(|(ln, l)| num(l, ln, "value"))
        .collect()
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read_text(path)?)
}

/// Parsed event stream: shape and events in replay order.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    pub m: usize,
    pub n: usize,
    pub events: Vec<StreamEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamEvent {
    /// Source line, for error messages.
    pub line: usize,
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub timestamp: Option<i64>,
}

impl StreamEvent {
    pub fn to_update(&self) -> UpdateEvent {
        UpdateEvent::Sparse {
            i: self.i,
            j: self.j,
            theta: self.theta,
        }
    }
}

/// Reads `m n count` followed by `i j theta [timestamp]` lines (1-based
/// indices). Timestamped streams are ordered by timestamp, ties keeping
/// file order.
pub fn parse_stream(text: &str) -> Result<StreamFile> {
    let mut lines = content_lines(text, "#");
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing 'm n count' header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(parse_err(hl, "header must be 'm n count'"));
    }
    let m: usize = num(h[0], hl, "row count")?;
    let n: usize = num(h[1], hl, "column count")?;
    let count: usize = num(h[2], hl, "event count")?;
    let mut events = Vec::with_capacity(count);
    let mut last = hl;
    for (ln, l) in lines {
        last = ln;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(parse_err(ln, "expected 'i j theta [timestamp]'"));
        }
        let i: usize = num(f[0], ln, "row index")?;
        let j: usize = num(f[1], ln, "column index")?;
        if i == 0 || i > m || j == 0 || j > n {
            return Err(parse_err(
                ln,
                format!("event index ({i}, {j}) outside {m}x{n}"),
            ));
        }
        let theta: f64 = num(f[2], ln, "theta")?;
        if !theta.is_finite() {
            return Err(parse_err(ln, "theta must be finite"));
        }
        let timestamp = f
            .get(3)
            .map(|t| num::<i64>(t, ln, "timestamp"))
            .transpose()?;
        if let Some(first) = events.first() {
            let first: &StreamEvent = first;
            if first.timestamp.is_some() != timestamp.is_some() {
                return Err(parse_err(
                    ln,
                    "timestamps must be given on every event or none",
                ));
            }
        }
        events.push(StreamEvent {
            line: ln,
            i: i - 1,
            j: j - 1,
            theta,
            timestamp,
        });
    }
    if events.len() != count {
        return Err(parse_err(
            last,
            format!("header promises {count} events, found {}", events.len()),
        ));
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(StreamFile { m, n, events })
}

pub fn read_stream(path: &Path) -> Result<StreamFile> {
    parse_stream(&read_text(path)?)
}

pub fn write_stream(s: &StreamFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", s.m, s.n, s.events.len());
    for e in &s.events {
        match e.timestamp {
            Some(t) => {
                let _ = writeln!(out, "{} {} {:e} {t}", e.i + 1, e.j + 1, e.theta);
            }
            None => {
                let _ = writeln!(out, "{} {} {:e}", e.i + 1, e.j + 1, e.theta);
            }
        }
    }
    out
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
