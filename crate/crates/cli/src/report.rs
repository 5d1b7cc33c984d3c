//! Uniform command output.
//!
//! Every command emits a [`Report`]: the echoed effective configuration,
//! scalar result fields, and an optional row table. Reports render as a
//! human table, as CSV (config echoed in `#` comments, summary fields as
//! trailing comments) or as a JSON document. Values are pre-formatted
//! strings so the bytes are identical regardless of thread count; wall
//! times go to stderr, never into a report.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Default)]
pub struct Report {
    command: String,
    config: Vec<(String, String)>,
    fields: Vec<(String, String)>,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn table<S: ToString>(&mut self, headers: &[S]) -> &mut Self {
        self.headers = headers.iter().map(S::to_string).collect();
        self
    }

    pub fn row<S: ToString>(&mut self, cells: &[S]) -> &mut Self {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells.iter().map(S::to_string).collect());
        self
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Table => self.render_table(),
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Json => self.render_json(),
        }
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "[{}]", self.command).unwrap();
        let width = self
            .config
            .iter()
            .chain(&self.fields)
            .map(|(k, _)| k.len())
            .max()
            .unwrap_or(0);
        for (k, v) in &self.config {
            writeln!(out, "  {k:<width$}  {v}").unwrap();
        }
        if !self.config.is_empty() && !self.fields.is_empty() {
            writeln!(out, "  {:-<width$}", "").unwrap();
        }
        for (k, v) in &self.fields {
            writeln!(out, "  {k:<width$}  {v}").unwrap();
        }
        if !self.headers.is_empty() {
            let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
            for row in &self.rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            out.push('\n');
            let header_line: Vec<String> = self
                .headers
                .iter()
                .zip(&widths)
                .map(|(h, w)| format!("{h:<w$}"))
                .collect();
            writeln!(out, "  {}", header_line.join("  ")).unwrap();
            for row in &self.rows {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                writeln!(out, "  {}", cells.join("  ").trim_end()).unwrap();
            }
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# command={}", self.command).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "# config.{k}={v}").unwrap();
        }
        if !self.headers.is_empty() {
            writeln!(out, "{}", self.headers.join(",")).unwrap();
            for row in &self.rows {
                writeln!(out, "{}", row.join(",")).unwrap();
            }
        }
        for (k, v) in &self.fields {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out
    }

    fn render_json(&self) -> String {
        let pairs = |items: &[(String, String)]| {
            let mut map = serde_json::Map::new();
            for (k, v) in items {
                map.insert(k.clone(), serde_json::Value::String(v.clone()));
            }
            serde_json::Value::Object(map)
        };
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut map = serde_json::Map::new();
                for (h, c) in self.headers.iter().zip(row) {
                    map.insert(h.clone(), serde_json::Value::String(c.clone()));
                }
                serde_json::Value::Object(map)
            })
            .collect();
        let mut doc = serde_json::Map::new();
        doc.insert(
            "command".into(),
            serde_json::Value::String(self.command.clone()),
        );
        doc.insert("config".into(), pairs(&self.config));
        doc.insert("fields".into(), pairs(&self.fields));
        if !self.headers.is_empty() {
            doc.insert("rows".into(), serde_json::Value::Array(rows));
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
            .expect("string-valued document");
        text.push('\n');
        text
    }
}

/// Format a float with full round-trip precision, deterministically.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Format a float for human consumption.
pub fn short(v: f64) -> String {
    format!("{v:.4}")
}
