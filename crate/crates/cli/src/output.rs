//! Artifact rendering: CSV, whitespace columns for gnuplot, or JSON.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i128),
    Big(u128),
    Flag(bool),
}

impl Cell {
    fn text(&self, format: Format) -> String {
        match self {
            // drop the sign of zero so outputs do not depend on it
            Cell::Num(x) if *x == 0.0 => format!("{:.16e}", 0.0),
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Int(i) => i.to_string(),
            Cell::Big(u) => u.to_string(),
            Cell::Flag(b) if format == Format::Gnuplot => u8::from(*b).to_string(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => i64::try_from(*i).map_or_else(|_| json!(i.to_string()), |v| json!(v)),
            Cell::Big(u) => big(*u),
            Cell::Flag(b) => json!(b),
        }
    }
}

/// JSON number when it fits in 64 bits, decimal string otherwise.
pub fn big(u: u128) -> Value {
    u64::try_from(u).map_or_else(|_| json!(u.to_string()), |v| json!(v))
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything a command produces.
#[derive(Clone, Debug)]
pub struct Artifact {
    /// Tolerances, truncations and summary diagnostics for the header block.
    pub parameters: Vec<(String, String)>,
    pub table: Table,
    /// Structured result used instead of the table for JSON output.
    pub document: Option<Value>,
}

impl Artifact {
    pub fn new(table: Table) -> Self {
        Artifact { parameters: Vec::new(), table, document: None }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.push((key.to_string(), value.to_string()));
        self
    }

    /// Float parameter in exponent form.
    pub fn num(self, key: &str, value: f64) -> Self {
        self.param(key, format!("{value:e}"))
    }

    pub fn with_document(mut self, doc: Value) -> Self {
        self.document = Some(doc);
        self
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub const HASH_KEY: &str = "config_sha256";

pub struct Provenance<'a> {
    pub command: &'a str,
    pub hash: &'a str,
    pub seed: Option<u64>,
}

pub fn render(art: &Artifact, prov: &Provenance<'_>, format: Format) -> String {
    let mut header = vec![
        ("generator".to_string(), format!("treeweyl {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), prov.command.to_string()),
        (HASH_KEY.to_string(), prov.hash.to_string()),
    ];
    if let Some(seed) = prov.seed {
        header.push(("seed".into(), seed.to_string()));
    }
    header.extend(art.parameters.iter().cloned());

    match format {
        Format::Json => {
            let mut obj = Map::new();
            for (k, v) in &header {
                obj.insert(k.clone(), json!(v));
            }
            match &art.document {
                Some(doc) => {
                    obj.insert("result".into(), doc.clone());
                }
                None => {
                    obj.insert("columns".into(), json!(art.table.columns));
                    let rows: Vec<Value> =
                        art.table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                    obj.insert("rows".into(), Value::Array(rows));
                }
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv | Format::Gnuplot => {
            let mut s = String::new();
            for (k, v) in &header {
                let _ = writeln!(s, "# {k}: {v}");
            }
            let sep = if format == Format::Csv { "," } else { " " };
            if format == Format::Gnuplot {
                s.push_str("# ");
            }
            s.push_str(&art.table.columns.join(sep));
            s.push('\n');
            for row in &art.table.rows {
                let cells: Vec<String> = row.iter().map(|c| c.text(format)).collect();
                s.push_str(&cells.join(sep));
                s.push('\n');
            }
            s
        }
    }
}

/// Config hash recorded in a rendered artifact, in any format.
pub fn recorded_hash(artifact: &str) -> Option<String> {
    let prefix = format!("# {HASH_KEY}: ");
    if let Some(line) = artifact.lines().find(|l| l.starts_with(&prefix)) {
        return Some(line[prefix.len()..].trim().to_string());
    }
    let v: Value = serde_json::from_str(artifact).ok()?;
    v.get(HASH_KEY)?.as_str().map(str::to_string)
}
