//! Column tables and their CSV/JSON renderings.

use nhyang::C64;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            Value::Text(_) => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:?}"),
            Value::Int(i) => i.to_string(),
            Value::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Value::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Value::Num(_) => s.serialize_none(),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Text(t) => s.serialize_str(t),
        }
    }
}

/// Builds one row; complex values expand into `_re`/`_im` pairs.
#[derive(Debug, Default)]
pub struct Row(Vec<Value>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, x: f64) -> Self {
        self.0.push(Value::Num(x));
        self
    }

    pub fn int(mut self, i: i64) -> Self {
        self.0.push(Value::Int(i));
        self
    }

    pub fn text(mut self, s: impl Into<String>) -> Self {
        self.0.push(Value::Text(s.into()));
        self
    }

    pub fn complex(self, z: C64) -> Self {
        self.num(z.re).num(z.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// Column spec: a name ending in `~` is complex and becomes `name_re, name_im`.
fn expand(columns: &[&str]) -> Vec<String> {
    columns
        .iter()
        .flat_map(|c| match c.strip_suffix('~') {
            Some(base) => vec![format!("{base}_re"), format!("{base}_im")],
            None => vec![c.to_string()],
        })
        .collect()
}

impl DataTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: expand(columns), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        assert_eq!(row.0.len(), self.columns.len(), "row width does not match table {}", self.name);
        self.rows.push(row.0);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }
}

/// Header fields written into every file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    #[serde(skip)]
    pub config_toml: String,
    pub config: serde_json::Value,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

#[derive(Serialize)]
struct JsonFile<'a> {
    #[serde(flatten)]
    meta: &'a Metadata,
    table: &'a str,
    columns: &'a [String],
    rows: &'a [Vec<Value>],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn render(table: &DataTable, meta: &Metadata, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table, meta),
        Format::Json => {
            let file = JsonFile { meta, table: &table.name, columns: &table.columns, rows: &table.rows };
            let mut s = serde_json::to_string_pretty(&file).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

fn render_csv(table: &DataTable, meta: &Metadata) -> String {
    let mut out = String::new();
    out.push_str(&format!("# nhyang {}\n# command: {}\n# table: {}\n# config:\n", meta.version, meta.command, table.name));
    for line in meta.config_toml.lines() {
        match line {
            "" => out.push_str("#\n"),
            _ => out.push_str(&format!("#   {line}\n")),
        }
    }
    for w in &meta.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    for f in &meta.failures {
        out.push_str(&format!("# failure: {f}\n"));
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Value::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
