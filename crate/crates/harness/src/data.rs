use std::fs;
use std::path::Path;

use synlik::simulators::Dataset;

use crate::trace_io::{format_f64, TraceError};

/// One observation per line, columns separated by whitespace or commas;
/// `#` starts a comment.
pub fn parse_dataset(text: &str) -> Result<Dataset, TraceError> {
    let mut values = Vec::new();
    let mut columns = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| TraceError::Parse { line: line_no, message: format!("bad number `{t}`") }))
            .collect::<Result<Vec<_>, _>>()?;
        match columns {
            None => columns = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(TraceError::Parse { line: line_no, message: format!("expected {c} columns, found {}", row.len()) })
            }
            _ => {}
        }
        values.extend(row);
    }
    let columns = columns.ok_or_else(|| TraceError::Parse { line: 1, message: "dataset is empty".into() })?;
    Ok(Dataset { values, columns })
}

pub fn format_dataset(data: &Dataset) -> String {
    let mut out = String::new();
    for row in data.values.chunks(data.columns.max(1)) {
        let fields: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

pub fn read_dataset(path: &Path) -> Result<Dataset, TraceError> {
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), TraceError> {
    fs::write(path, format_dataset(data)).map_err(|source| TraceError::Io { path: path.display().to_string(), source })
}
