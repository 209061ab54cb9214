//! Line-oriented measure format: `dim=<d> atoms=<k>` followed by one
//! `w x1 .. xd` line per atom. Floats are written with 17 significant
//! digits so parsing recovers the exact bits.

use std::fmt::Write as _;

use super::Point;
use crate::error::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atoms<'a>(dim: usize, atoms: impl Iterator<Item = (&'a Point, f64)>) -> String {
    let atoms: Vec<_> = atoms.collect();
    let mut out = format!("dim={dim} atoms={}\n", atoms.len());
    for (p, w) in atoms {
        out.push_str(&fmt_exact(w));
        for c in p.coords() {
            out.push(' ');
            out.push_str(&fmt_exact(*c));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn parse_header_field(token: &str, key: &str, line: usize) -> Result<usize> {
    let value = token
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::Parse { line, message: format!("expected `{key}=<n>`, found `{token}`") })?;
    value
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("invalid {key} value `{value}`") })
}

pub(crate) fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let x: f64 = token
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("invalid number `{token}`") })?;
    if !x.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite number `{token}`") });
    }
    Ok(x)
}

/// Numbered non-blank lines; `#` starts a comment line.
pub(crate) fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parse the atom block of a measure file. Weights are returned unchecked
/// so the caller decides whether signs are allowed.
pub fn parse_atoms(s: &str) -> Result<(usize, Vec<(Point, f64)>)> {
    let mut lines = content_lines(s);
    let (hline, header) =
        lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(Error::Parse { line: hline, message: "header must be `dim=<d> atoms=<k>`".into() });
    }
    let dim = parse_header_field(tokens[0], "dim", hline)?;
    let count = parse_header_field(tokens[1], "atoms", hline)?;
    if dim == 0 {
        return Err(Error::Parse { line: hline, message: "dim must be positive".into() });
    }
    let mut atoms = Vec::with_capacity(count);
    for (line, text) in lines.by_ref().take(count) {
        let nums = text
            .split_whitespace()
            .map(|t| parse_f64(t, line))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != dim + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} numbers, found {}", dim + 1, nums.len()),
            });
        }
        atoms.push((Point::new(nums[1..].to_vec())?, nums[0]));
    }
    if atoms.len() != count {
        return Err(Error::Parse {
            line: s.lines().count() + 1,
            message: format!("expected {count} atoms, found {}", atoms.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse { line, message: "unexpected content after atoms".into() });
    }
    Ok((dim, atoms))
}

/// Append a `plan rows=<r> cols=<c>` section listing nonzero masses.
pub fn write_plan(out: &mut String, rows: usize, cols: usize, mass: &[Vec<f64>]) {
    writeln!(out, "plan rows={rows} cols={cols}").unwrap();
    for (i, row) in mass.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            if *m != 0.0 {
                writeln!(out, "{i} {j} {}", fmt_exact(*m)).unwrap();
            }
        }
    }
}
