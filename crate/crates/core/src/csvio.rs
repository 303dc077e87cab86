//! CSV artifacts: one `# key=value ...` metadata line, a header row, then
//! numeric rows. Quoting follows RFC 4180 via the `csv` crate.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Format version written into every metadata line.
pub const FORMAT_VERSION: &str = "1";

/// Ordered `key=value` metadata. Keys and values are stored without
/// whitespace so the line splits on blanks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

impl Metadata {
    pub fn new(config_hash: &str) -> Self {
        let mut m = Self::default();
        m.push("version", FORMAT_VERSION);
        m.push("crate_version", env!("CARGO_PKG_VERSION"));
        m.push("config_hash", config_hash);
        m
    }

    pub fn push(&mut self, key: &str, value: impl MetaValue) -> &mut Self {
        self.entries.push((squash(key).replace('=', "_"), squash(&value.render())));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn line(&self) -> String {
        let mut s = String::from("#");
        for (k, v) in &self.entries {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::Csv { line: 1, detail: "metadata line must start with '#'".into() })?;
        let mut m = Self::default();
        for tok in body.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Csv { line: 1, detail: format!("metadata token {tok:?} is not key=value") })?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }
}

pub trait MetaValue {
    fn render(&self) -> String;
}

impl MetaValue for f64 {
    fn render(&self) -> String {
        fmt_f64(*self)
    }
}

macro_rules! display_meta {
    ($($t:ty),*) => {$(
        impl MetaValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_meta!(usize, u64, bool, &str, String);

/// Shortest round-trip decimal form; identical inputs give identical text.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(meta: Metadata, columns: &[&str]) -> Self {
        Self { meta, columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Header row and data rows, without the metadata line.
    pub fn body(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Csv { line: 0, detail: e.to_string() };
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv { line: 0, detail: e.to_string() })?;
        String::from_utf8(bytes).map_err(|e| Error::Csv { line: 0, detail: e.to_string() })
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(format!("{}\r\n{}", self.meta.line(), self.body()?))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }
}

/// Reads a table written by [`Table::write`]. Further `#` lines are
/// skipped as comments; every row must match the header width.
pub fn parse_table(text: &str) -> Result<Table> {
    let (first, rest) = match text.split_once('\n') {
        Some((a, b)) => (a.trim_end_matches('\r'), b),
        None => (text.trim_end_matches('\r'), ""),
    };
    let meta = Metadata::parse_line(first)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(rest.as_bytes());
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 2, detail: e.to_string() })?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
        return Err(Error::Csv { line: 2, detail: "missing header row".into() });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            Error::Csv { line, detail: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize + 1);
        let row = rec
            .iter()
            .map(|f| match f.trim() {
                "nan" => Ok(f64::NAN),
                s => s.parse::<f64>().map_err(|_| Error::Csv { line, detail: format!("non-numeric field {s:?}") }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { meta, columns, rows })
}

pub fn read_table(path: &Path) -> Result<Table> {
    parse_table(&std::fs::read_to_string(path)?)
}
