//! The alist sparse-matrix text format.

use std::path::Path;

use super::code::LdpcCode;
use crate::error::{Error, Result};

/// Writes `code` as alist text (1-based indices, zero padded lists).
pub fn to_alist(code: &LdpcCode) -> String {
    let n = code.n();
    let m = code.n_checks();
    let max_col = code.columns().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = code.rows().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = format!("{n} {m}\n{max_col} {max_row}\n");
    let join = |v: Vec<String>| v.join(" ");
    out.push_str(&join(
        code.columns().iter().map(|c| c.len().to_string()).collect(),
    ));
    out.push('\n');
    out.push_str(&join(
        code.rows().iter().map(|r| r.len().to_string()).collect(),
    ));
    out.push('\n');
    for col in code.columns() {
        let mut items: Vec<String> = col.iter().map(|&r| (r + 1).to_string()).collect();
        items.resize(max_col, "0".into());
        out.push_str(&join(items));
        out.push('\n');
    }
    for row in code.rows() {
        let mut items: Vec<String> = row.iter().map(|&c| (c + 1).to_string()).collect();
        items.resize(max_row, "0".into());
        out.push_str(&join(items));
        out.push('\n');
    }
    out
}

/// Parses alist text. When `check_degree` is given, every row must have
/// that degree.
pub fn parse_alist(text: &str, check_degree: Option<usize>) -> Result<LdpcCode> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let mut next = |what: &str| -> Result<(usize, Vec<usize>)> {
        let (no, line) = lines.next().ok_or(Error::Alist {
            line: 0,
            msg: format!("missing {what}"),
        })?;
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Alist {
                line: no + 1,
                msg: e.to_string(),
            })?;
        Ok((no + 1, nums))
    };
    let bad = |line: usize, msg: String| Error::Alist { line, msg };
    let (l, dims) = next("dimensions")?;
    if dims.len() != 2 {
        return Err(bad(l, "expected `n m`".into()));
    }
    let (n, m) = (dims[0], dims[1]);
    let (l, maxes) = next("maximum degrees")?;
    if maxes.len() != 2 {
        return Err(bad(l, "expected maximum column and row degrees".into()));
    }
    let (l, col_deg) = next("column degrees")?;
    if col_deg.len() != n {
        return Err(bad(
            l,
            format!("{} column degrees for n = {n}", col_deg.len()),
        ));
    }
    let (l, row_deg) = next("row degrees")?;
    if row_deg.len() != m {
        return Err(bad(l, format!("{} row degrees for m = {m}", row_deg.len())));
    }
    let mut cols: Vec<Vec<u32>> = Vec::with_capacity(n);
    for (j, &d) in col_deg.iter().enumerate() {
        let (l, items) = next("column list")?;
        let list: Vec<usize> = items.into_iter().filter(|&x| x != 0).collect();
        if list.len() != d {
            return Err(bad(
                l,
                format!("column {} lists {} rows, degree {d}", j + 1, list.len()),
            ));
        }
        let mut sorted = list.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad(l, format!("column {} has a duplicated edge", j + 1)));
        }
        if list.iter().any(|&r| r > m) {
            return Err(bad(
                l,
                format!("column {} references a row beyond {m}", j + 1),
            ));
        }
        cols.push(list.iter().map(|&r| (r - 1) as u32).collect());
    }
    let mut rows_seen: Vec<Vec<u32>> = Vec::with_capacity(m);
    for (i, &d) in row_deg.iter().enumerate() {
        let (l, items) = next("row list")?;
        let list: Vec<usize> = items.into_iter().filter(|&x| x != 0).collect();
        if list.len() != d || list.iter().any(|&c| c > n) {
            return Err(bad(
                l,
                format!("row {} list inconsistent with its degree", i + 1),
            ));
        }
        let mut sorted: Vec<u32> = list.iter().map(|&c| (c - 1) as u32).collect();
        sorted.sort_unstable();
        rows_seen.push(sorted);
    }
    let code = LdpcCode::from_columns(m, cols).map_err(|e| bad(0, e.to_string()))?;
    for (i, row) in code.rows().iter().enumerate() {
        let mut r = row.clone();
        r.sort_unstable();
        if r != rows_seen[i] {
            return Err(bad(
                0,
                format!("row {} disagrees with the column lists", i + 1),
            ));
        }
        if let Some(dc) = check_degree {
            if row.len() != dc {
                return Err(bad(
                    0,
                    format!("row {} has degree {}, expected {dc}", i + 1, row.len()),
                ));
            }
        }
    }
    Ok(code)
}

/// Loads a parity-check matrix from an alist file.
pub fn load_external(path: &Path, check_degree: Option<usize>) -> Result<LdpcCode> {
    parse_alist(&std::fs::read_to_string(path)?, check_degree)
}
