//! Model file format: `states=<k> dim=<d>`, then one line of coordinates
//! per state, then `k` lines holding the rows of `P`.

use super::MarkovModel;
use crate::error::{Error, Result};
use crate::measures::{content_lines, fmt_exact, parse_f64, parse_header_field, Point};

pub(super) fn write_model(model: &MarkovModel) -> String {
    let join = |xs: &[f64]| xs.iter().map(|x| fmt_exact(*x)).collect::<Vec<_>>().join(" ");
    let mut out = format!("states={} dim={}\n", model.len(), model.dim());
    for s in model.states() {
        out.push_str(&join(s.coords()));
        out.push('\n');
    }
    for row in model.rows() {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}

fn numbers(line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let nums = text.split_whitespace().map(|t| parse_f64(t, line)).collect::<Result<Vec<_>>>()?;
    if nums.len() != expected {
        return Err(Error::Parse { line, message: format!("expected {expected} numbers, found {}", nums.len()) });
    }
    Ok(nums)
}

pub(super) fn parse_model(s: &str) -> Result<MarkovModel> {
    let mut lines = content_lines(s);
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(Error::Parse { line: hline, message: "header must be `states=<k> dim=<d>`".into() });
    }
    let k = parse_header_field(tokens[0], "states", hline)?;
    let d = parse_header_field(tokens[1], "dim", hline)?;
    if k == 0 || d == 0 {
        return Err(Error::Parse { line: hline, message: "states and dim must be positive".into() });
    }
    let mut last = hline;
    let mut states = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, text) = lines.next().ok_or(Error::Parse { line: last + 1, message: "missing state line".into() })?;
        states.push(Point::new(numbers(line, text, d)?)?);
        last = line;
    }
    for _ in 0..k {
        let (line, text) = lines.next().ok_or(Error::Parse { line: last + 1, message: "missing kernel row".into() })?;
        rows.push(numbers(line, text, k)?);
        last = line;
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse { line, message: "unexpected content after kernel rows".into() });
    }
    MarkovModel::new(states, rows)
}
