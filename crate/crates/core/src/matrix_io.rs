//! Plain-text complex matrix format.
//!
//! ```text
//! complex-matrix 2 3
//! 1.0000000000000000e0+0.0000000000000000e0j 0.0000000000000000e0-2.5000000000000000e-1j ...
//! ...
//! ```
//!
//! One header line `complex-matrix <rows> <cols>`, then one line per row with
//! whitespace-separated `re+imj` entries. Values are written with 17
//! significant digits so every finite `f64` round-trips bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const HEADER: &str = "complex-matrix";

pub fn format_entry(v: Complex64) -> String {
    format!("{:.16e}{:+.16e}j", v.re, v.im)
}

pub fn parse_entry(token: &str) -> std::result::Result<Complex64, String> {
    let body = token
        .strip_suffix('j')
        .ok_or_else(|| format!("entry `{token}` does not end in `j`"))?;
    // the imaginary part starts at the last sign that is not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| format!("entry `{token}` has no imaginary part"))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|e| format!("bad real part in `{token}`: {e}"))?;
    let im: f64 = body[split..]
        .trim_start_matches('+')
        .parse()
        .map_err(|e| format!("bad imaginary part in `{token}`: {e}"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("non-finite entry `{token}`"));
    }
    Ok(Complex64::new(re, im))
}

pub fn to_text(m: &CMatrix) -> String {
    let mut out = String::with_capacity(m.len() * 48 + 32);
    let _ = writeln!(out, "{HEADER} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_entry(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: 1,
        msg: format!("expected `{HEADER} <rows> <cols>`, got `{header}`"),
    };
    if parts.len() != 3 || parts[0] != HEADER {
        return Err(bad_header());
    }
    let rows: usize = parts[1].parse().map_err(|_| bad_header())?;
    let cols: usize = parts[2].parse().map_err(|_| bad_header())?;

    let mut m = CMatrix::zeros(rows, cols);
    let mut seen = 0;
    for (idx, line) in lines {
        if seen == rows {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "more rows than declared".into(),
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected {cols} entries, found {}", tokens.len()),
            });
        }
        for (j, tok) in tokens.iter().enumerate() {
            m[(seen, j)] = parse_entry(tok).map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            line: seen + 2,
            msg: format!("expected {rows} rows, found {seen}"),
        });
    }
    Ok(m)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &CMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}
