//! CSV output with a `#` metadata preamble.
//!
//! The preamble is TOML with every line prefixed by `# `: a `[meta]`
//! section (command, code version, geometry tag, seed), an optional
//! `[result]` section, then the fully resolved configuration. Stripping the
//! prefix yields a config file that reproduces the run.
//!
//! Floats use Rust's shortest round-trip formatting, so parsing a field
//! gives back the exact `f64` that was written.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use toml::{Table, Value};

/// Shortest decimal that parses back to `x` exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV document assembled in memory and written in one go.
pub struct Document {
    pub meta: Table,
    pub result: Table,
    pub config: Table,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Document {
    pub fn new(meta: Table, config: Table, header: &[&str]) -> Self {
        Document {
            meta,
            result: Table::new(),
            config,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn preamble(&self) -> String {
        let mut doc = Table::new();
        doc.insert("meta".into(), Value::Table(self.meta.clone()));
        if !self.result.is_empty() {
            doc.insert("result".into(), Value::Table(self.result.clone()));
        }
        for (k, v) in &self.config {
            doc.insert(k.clone(), v.clone());
        }
        let text = toml::to_string(&doc).expect("metadata serializes");
        commented(&text)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.preamble().as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write to `path`, or to stdout when no path is configured.
    pub fn save(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                self.write_to(io::BufWriter::new(f))
            }
            None => self.write_to(io::stdout().lock()),
        }
    }
}

/// Prefix every line with `# ` (bare `#` for blank lines).
pub fn commented(text: &str) -> String {
    text.lines()
        .map(|l| if l.is_empty() { "#\n".to_string() } else { format!("# {l}\n") })
        .collect()
}

/// Append rows to a log file, writing the preamble and header only when
/// the file is new or empty.
pub fn append_log(path: &Path, preamble: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        f.write_all(preamble.as_bytes())?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    if fresh {
        w.write_record(header)?;
    }
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file read back: preamble as TOML plus header and rows.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub preamble: Table,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Parsed {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("missing column `{name}`"))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[c].trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .with_context(|| format!("column `{name}`: `{s}` is not a number"))
                }
            })
            .collect()
    }

    pub fn meta(&self, key: &str) -> Option<&Value> {
        self.preamble.get("meta")?.as_table()?.get(key)
    }
}

pub fn read(path: &Path) -> Result<Parsed> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut comments = String::new();
    let mut body = String::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            comments.push_str(rest.strip_prefix(' ').unwrap_or(rest));
            comments.push('\n');
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let preamble: Table = toml::from_str(&comments).with_context(|| format!("{}: malformed preamble", path.display()))?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    if header.is_empty() {
        bail!("{}: no header row", path.display());
    }
    Ok(Parsed { preamble, header, rows })
}
