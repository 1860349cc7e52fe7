//! Tables, the metadata header, and CSV/JSON writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::settings::{Format, Settings};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CONVENTIONS: [&str; 3] = [
    "quadrature x = a + a^dagger (vacuum delta_x = 1)",
    "finite-size exponents: A ~ L^delta at eps = 1, nu = -gamma/delta",
    "positive-P drift carries the factor eps on the conjugate pair term",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// NaN becomes an empty cell.
    pub fn num(x: f64) -> Cell {
        if x.is_nan() {
            Cell::Empty
        } else {
            Cell::Num(x)
        }
    }

    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(format!("{x}")),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric value at `(row, column)`, `None` for empty or non-numeric cells.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(name)?)? {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// The result of one command: header metadata plus one or more tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Document {
    pub fn new(settings: &Settings, tables: Vec<Table>) -> Self {
        Self { command: settings.command.name().into(), config: settings.canonical(), tables }
    }

    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.config {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn header(&self, table: &Table) -> String {
        let mut s = format!("# bqpt {VERSION}\n# command: {}\n# table: {}\n", self.command, table.name);
        s += &format!("# config-hash: sha256:{}\n", self.config_hash());
        for (k, v) in &self.config {
            s += &format!("# config: {k}={v}\n");
        }
        for c in CONVENTIONS {
            s += &format!("# convention: {c}\n");
        }
        s
    }

    pub fn to_csv(&self, table: &Table) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&table.columns).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(self.header(table) + &String::from_utf8_lossy(&body))
    }

    pub fn to_json(&self) -> String {
        let tables: serde_json::Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: Vec<Value> =
                    t.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                (t.name.clone(), json!({ "columns": t.columns, "rows": rows }))
            })
            .collect();
        let config: serde_json::Map<String, Value> = self.config.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let doc = json!({
            "program": "bqpt",
            "version": VERSION,
            "command": self.command,
            "config_hash": format!("sha256:{}", self.config_hash()),
            "config": config,
            "conventions": CONVENTIONS,
            "tables": tables,
        });
        serde_json::to_string_pretty(&doc).expect("json values are always serializable") + "\n"
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// `out.csv` for the first table, `out.<name>.csv` for the others.
pub fn table_path(out: &Path, index: usize, name: &str) -> PathBuf {
    if index == 0 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}{ext}"))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".log");
    out.with_file_name(name)
}

/// Writes the document to `settings.out`, or to stdout when no path is set.
pub fn emit(doc: &Document, settings: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    match (&settings.out, settings.format) {
        (Some(out), Format::Json) => {
            fs::write(out, doc.to_json())?;
            written.push(out.clone());
        }
        (Some(out), Format::Csv) => {
            for (i, t) in doc.tables.iter().enumerate() {
                let path = table_path(out, i, &t.name);
                fs::write(&path, doc.to_csv(t)?)?;
                written.push(path);
            }
        }
        (None, Format::Json) => print!("{}", doc.to_json()),
        (None, Format::Csv) => {
            for (i, t) in doc.tables.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", doc.to_csv(t)?);
            }
        }
    }
    Ok(written)
}

/// Timing notes kept out of the primary output.
#[derive(Debug)]
pub struct RunLog {
    start: Instant,
    lines: Vec<String>,
}

impl Default for RunLog {
    fn default() -> Self {
        Self::new()
    }
}

impl RunLog {
    pub fn new() -> Self {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { start: Instant::now(), lines: vec![format!("started unix={stamp}")] }
    }

    pub fn note(&mut self, message: impl Into<String>) {
        let line = format!("[{:9.3}s] {}", self.start.elapsed().as_secs_f64(), message.into());
        log::info!("{line}");
        self.lines.push(line);
    }

    pub fn write(&self, out: &Path) -> std::io::Result<()> {
        let mut f = fs::File::create(sidecar_path(out))?;
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}
