use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::OutputFormat;
use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `v` with [`SIGNIFICANT_DIGITS`] significant digits, fixed notation
/// for moderate exponents and scientific otherwise, trailing zeros trimmed.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// SHA-256 of the serialized grid values.
pub fn grid_hash(values: &[f64]) -> String {
    let text = values.iter().map(|&v| format_value(v)).collect::<Vec<_>>().join(",");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    /// File stem, e.g. `qsl_scan`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Header lines as `(key, value)`.
    pub metadata: Vec<(String, String)>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    metadata: serde_json::Map<String, serde_json::Value>,
    columns: &'a [String],
    rows: Vec<Vec<serde_json::Value>>,
}

impl OutputTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        OutputTable {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let metadata = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| {
                        serde_json::Number::from_f64(format_value(v).parse().unwrap_or(v))
                            .map_or(serde_json::Value::Null, serde_json::Value::Number)
                    })
                    .collect()
            })
            .collect();
        let table = JsonTable {
            metadata,
            columns: &self.columns,
            rows,
        };
        let mut text = serde_json::to_string_pretty(&table).expect("table serializes");
        text.push('\n');
        text
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn file_name(&self, format: OutputFormat) -> String {
        format!("{}.{}", self.name, format)
    }
}

/// Parses a CSV table written by [`OutputTable::to_csv`].
pub fn parse_csv(name: &str, text: &str) -> Result<OutputTable> {
    let mut table = OutputTable::new(name, &[]);
    let mut lines = text.lines();
    let header = loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::MalformedTable(format!("table {name} has no header row")))?;
        match line.strip_prefix("# ") {
            Some(meta) => {
                let (k, v) = meta.split_once(" = ").unwrap_or((meta, ""));
                table.meta(k, v);
            }
            None => break line,
        }
    };
    table.columns = header.split(',').map(str::to_string).collect();
    for line in lines.filter(|l| !l.is_empty()) {
        let row = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|_| Error::MalformedTable(format!("table {name}: bad cell `{cell}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != table.columns.len() {
            return Err(Error::MalformedTable(format!("table {name}: ragged row `{line}`")));
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// Writes every table into `dir`. Each file goes through a temporary sibling
/// and a rename; on any failure the files written so far are removed.
pub fn write_tables(tables: &[OutputTable], dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::with_capacity(tables.len());
    for table in tables {
        let path = dir.join(table.file_name(format));
        let tmp = dir.join(format!(".{}.partial", table.file_name(format)));
        let result = fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(table.render(format).as_bytes())?;
                f.sync_all()
            })
            .and_then(|_| fs::rename(&tmp, &path));
        if let Err(source) = result {
            let _ = fs::remove_file(&tmp);
            for done in &written {
                let _ = fs::remove_file(done);
            }
            return Err(Error::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}
