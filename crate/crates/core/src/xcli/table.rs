//! Result tables and their CSV/JSON serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn is_nan(&self) -> bool {
        matches!(self, Cell::Float(x) if x.is_nan())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    /// NaN is written only into columns that declare it.
    pub allow_nan: bool,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Column { name: name.into(), unit: unit.into(), allow_nan: false }
    }

    pub fn nullable(mut self) -> Self {
        self.allow_nan = true;
        self
    }

    fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} ({})", self.name, self.unit)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    /// File stem.
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        ResultTable { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::param(format!(
                "table {}: row has {} cells, schema has {}",
                self.name,
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, col) in row.iter().zip(&self.columns) {
            if cell.is_nan() && !col.allow_nan {
                return Err(Error::param(format!("table {}: NaN in column {}", self.name, col.name)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of one column.
    pub fn column_values(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column_index(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match &r[i] {
                Cell::Int(v) => Some(*v as f64),
                Cell::Float(v) => Some(*v),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub experiment: String,
    pub anchor: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub code_version: String,
    /// Canonical config text.
    pub config: String,
}

/// CSV with `# ` comment lines carrying the metadata and the config.
pub fn to_csv(table: &ResultTable, meta: &RunMetadata) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# experiment: {} ({})\n", meta.experiment, meta.anchor));
    out.push_str(&format!("# table: {}\n", table.name));
    out.push_str(&format!("# config_sha256: {}\n", meta.config_sha256));
    out.push_str(&format!("# master_seed: {}\n", meta.master_seed));
    out.push_str(&format!("# code_version: {}\n", meta.code_version));
    out.push_str("# config:\n");
    for line in meta.config.lines() {
        out.push_str(&format!("#   {line}\n"));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(table.columns.iter().map(Column::header)).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    metadata: &'a RunMetadata,
    wall_time_s: f64,
    table: &'a ResultTable,
}

pub fn to_json(table: &ResultTable, meta: &RunMetadata, wall_time_s: f64) -> Result<String> {
    serde_json::to_string_pretty(&JsonDoc { metadata: meta, wall_time_s, table })
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

pub fn write_file(dir: &Path, file: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMetadata {
        RunMetadata {
            experiment: "demo".into(),
            anchor: "Fig. 0".into(),
            config_sha256: "abc".into(),
            master_seed: 3,
            code_version: "0.1.0".into(),
            config: "a = 1\nb = 2".into(),
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new("demo", vec![Column::new("t", "steps"), Column::new("mean_E", "bits"), Column::new("label", "")]);
        t.push(vec![0usize.into(), 0.5.into(), "x,y".into()]).unwrap();
        let s = to_csv(&t, &meta()).unwrap();
        assert!(s.starts_with("# experiment: demo (Fig. 0)\n"));
        assert!(s.contains("#   a = 1\n"));
        assert!(s.contains("t (steps),mean_E (bits),label\r\n0,0.5,\"x,y\"\r\n"));
        assert_eq!(t.column_values("mean_E"), vec![0.5]);
    }

    #[test]
    fn schema_is_enforced() {
        let mut t = ResultTable::new("demo", vec![Column::new("a", ""), Column::new("b", "").nullable()]);
        assert!(t.push(vec![1.0.into()]).is_err());
        assert!(t.push(vec![f64::NAN.into(), 1.0.into()]).is_err());
        assert!(t.push(vec![1.0.into(), f64::NAN.into()]).is_ok());
        let j = to_json(&t, &meta(), 1.5).unwrap();
        assert!(j.contains("\"wall_time_s\": 1.5"));
    }
}
