//! Result tables and their CSV / JSON forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = OutputError;

    fn from_str(s: &str) -> Result<Self, OutputError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(OutputError::Parse(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table: {0}")]
    Parse(String),
    #[error("column `{name}` has {len} rows, expected {expected}")]
    Ragged { name: String, len: usize, expected: usize },
}

/// Named columns of equal length plus string metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<(String, Vec<f64>)>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new(metadata: BTreeMap<String, String>) -> Self {
        Self {
            columns: Vec::new(),
            metadata,
        }
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<(), OutputError> {
        if let Some(expected) = self.columns.first().map(|c| c.1.len()) {
            if values.len() != expected {
                return Err(OutputError::Ragged {
                    name: name.to_string(),
                    len: values.len(),
                    expected,
                });
            }
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.0 == name).map(|c| c.1.as_slice())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), OutputError> {
        std::fs::write(path, self.render(format)).map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// `# key=value` metadata lines (scenario first), a header, then rows
    /// with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, k: &str, v: &str| {
            let _ = writeln!(s, "# {k}={}", v.replace(['\n', '\r'], " "));
        };
        if let Some(v) = self.metadata.get("scenario") {
            line(&mut s, "scenario", v);
        }
        for (k, v) in self.metadata.iter().filter(|(k, _)| *k != "scenario") {
            line(&mut s, k, v);
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for i in 0..self.rows() {
            let row: Vec<String> = self.columns.iter().map(|c| format!("{:.16e}", c.1[i])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, OutputError> {
        let mut metadata = BTreeMap::new();
        let mut lines = text.lines();
        let mut header = None;
        for l in lines.by_ref() {
            if let Some(rest) = l.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| OutputError::Parse(format!("metadata line `{l}`")))?;
                metadata.insert(k.to_string(), v.to_string());
            } else {
                header = Some(l);
                break;
            }
        }
        let mut table = Self::new(metadata);
        let Some(header) = header else {
            return Ok(table);
        };
        let names: Vec<&str> = if header.is_empty() {
            vec![]
        } else {
            header.split(',').collect()
        };
        let mut cols = vec![Vec::new(); names.len()];
        for l in lines.filter(|l| !l.is_empty()) {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != names.len() {
                return Err(OutputError::Parse(format!("row `{l}` has {} cells", cells.len())));
            }
            for (c, cell) in cols.iter_mut().zip(cells) {
                c.push(
                    cell.parse::<f64>()
                        .map_err(|e| OutputError::Parse(format!("`{cell}`: {e}")))?,
                );
            }
        }
        for (n, c) in names.into_iter().zip(cols) {
            table.push(n, c)?;
        }
        Ok(table)
    }

    /// `{"metadata": {...}, "columns": {name: [values]}}`; non-finite values
    /// become `null`.
    pub fn to_json(&self) -> String {
        let mut cols = Map::new();
        for (name, v) in &self.columns {
            cols.insert(
                name.clone(),
                Json::Array(
                    v.iter()
                        .map(|x| json!(if x.is_finite() { Some(*x) } else { None }))
                        .collect(),
                ),
            );
        }
        let doc = json!({ "metadata": self.metadata, "columns": cols });
        let mut s = serde_json::to_string_pretty(&doc).expect("tables always serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, OutputError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| OutputError::Parse(e.to_string()))?;
        let bad = |what: &str| OutputError::Parse(format!("missing or malformed `{what}`"));
        let meta = doc
            .get("metadata")
            .and_then(Json::as_object)
            .ok_or_else(|| bad("metadata"))?;
        let metadata = meta
            .iter()
            .map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())).ok_or_else(|| bad(k)))
            .collect::<Result<_, _>>()?;
        let mut table = Self::new(metadata);
        let cols = doc
            .get("columns")
            .and_then(Json::as_object)
            .ok_or_else(|| bad("columns"))?;
        for (name, v) in cols {
            let values = v
                .as_array()
                .ok_or_else(|| bad(name))?
                .iter()
                .map(|x| if x.is_null() { Some(f64::NAN) } else { x.as_f64() })
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad(name))?;
            table.push(name, values)?;
        }
        Ok(table)
    }
}
