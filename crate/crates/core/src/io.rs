//! Reading and writing tables, label grids and p.m.f.s.
//!
//! Counts and labels are plain CSV: one row per line, comma separated, no
//! header. Blank lines and lines starting with `#` are skipped. Errors carry
//! 1-based line numbers.

use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, Trim};

use crate::error::{Error, Result};
use crate::gof::GroupingMatrix;
use crate::pmf::{BivariatePmf, ContingencyTable};

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parses a rectangular CSV grid.
fn parse_grid<T: FromStr>(text: &str, what: &str) -> Result<Vec<Vec<T>>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<T>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(k, field)| {
                field.parse::<T>().map_err(|_| Error::Format {
                    line,
                    msg: format!("field {} is not a valid {what}: {field:?}", k + 1),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format { line, msg: format!("expected {} fields, found {}", first.len(), row.len()) });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format { line: 0, msg: "no rows".into() });
    }
    Ok(rows)
}

pub fn parse_counts_csv(text: &str) -> Result<ContingencyTable> {
    let rows = parse_grid::<u64>(text, "nonnegative integer count")?;
    if rows.iter().flatten().all(|c| *c == 0) {
        return Err(Error::Format { line: 0, msg: "table has no observations".into() });
    }
    ContingencyTable::from_rows(&rows)
}

pub fn read_counts_csv(path: impl AsRef<Path>) -> Result<ContingencyTable> {
    parse_counts_csv(&read_file(path.as_ref())?)
}

pub fn counts_to_csv(t: &ContingencyTable) -> String {
    t.to_rows().iter().map(|r| r.iter().map(u64::to_string).collect::<Vec<_>>().join(",") + "\n").collect()
}

/// Label grid: positive integers group cells, 0 leaves a cell alone.
pub fn parse_labels_csv(text: &str) -> Result<Vec<Vec<i64>>> {
    parse_grid::<i64>(text, "integer label")
}

pub fn read_grouping_csv(path: impl AsRef<Path>) -> Result<GroupingMatrix> {
    GroupingMatrix::from_labels(&parse_labels_csv(&read_file(path.as_ref())?)?)
}

/// `{"r": .., "s": .., "values": [[..], ..]}`.
pub fn parse_pmf_json(text: &str) -> Result<BivariatePmf> {
    serde_json::from_str(text).map_err(|e| Error::Format { line: e.line(), msg: e.to_string() })
}

pub fn read_pmf_json(path: impl AsRef<Path>) -> Result<BivariatePmf> {
    parse_pmf_json(&read_file(path.as_ref())?)
}
