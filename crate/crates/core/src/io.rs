//! Whitespace-separated column files: `#` comment lines, one header line, numeric rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColumnTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ColumnTable {
    pub fn new(columns: Vec<String>) -> Self {
        ColumnTable {
            comments: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn with_columns(columns: &[&str]) -> Self {
        Self::new(columns.iter().map(|s| s.to_string()).collect())
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidDataset(format!("missing column {name}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Value of `key=value` in the comment lines, if present.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        let prefix = format!("{key}=");
        self.comments
            .iter()
            .flat_map(|c| c.split_whitespace())
            .find_map(|tok| tok.strip_prefix(prefix.as_str()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.columns.join(" "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = ColumnTable::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                table.comments.push(c.trim().to_string());
            } else if !header {
                table.columns = line.split_whitespace().map(String::from).collect();
                header = true;
            } else {
                let row = line
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| Error::InvalidDataset(format!("line {}: bad number {tok:?}", lineno + 1)))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if row.len() != table.columns.len() {
                    return Err(Error::InvalidDataset(format!(
                        "line {}: {} values for {} columns",
                        lineno + 1,
                        row.len(),
                        table.columns.len()
                    )));
                }
                table.rows.push(row);
            }
        }
        if !header {
            return Err(Error::InvalidDataset("no header line".into()));
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
