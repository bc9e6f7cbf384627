//! Line-oriented record streams.
//!
//! A stream starts with `# lll-records v<version>`, then one `config` record
//! listing every configuration field. Each later line is `<kind>` followed
//! by `key=value` fields, the first of which is always `config=<hash>`.
//! Values never contain whitespace.

use std::io::Write;

use sha2::{Digest, Sha256};

use crate::harness::{parse_error, HarnessError};

pub const SCHEMA_VERSION: u32 = 1;

/// Leading line of every stream.
pub fn schema_header() -> String {
    format!("# lll-records v{SCHEMA_VERSION}")
}

/// First 16 hex digits of the SHA-256 of the canonical config text.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Record { kind: kind.to_string(), fields: Vec::new() }
    }

    /// Whitespace inside `value` is replaced by `_`.
    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        let value: String = value.to_string().chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut line = self.kind.clone();
        for (k, v) in &self.fields {
            line.push(' ');
            line.push_str(k);
            line.push('=');
            line.push_str(v);
        }
        line
    }

    pub fn parse(line: &str) -> Result<Self, HarnessError> {
        let mut parts = line.split_whitespace();
        let kind = parts.next().ok_or_else(|| parse_error(0, "empty record"))?;
        let mut record = Record::new(kind);
        for part in parts {
            let (k, v) = part.split_once('=').ok_or_else(|| parse_error(0, format!("field `{part}` lacks `=`")))?;
            record.fields.push((k.to_string(), v.to_string()));
        }
        Ok(record)
    }
}

/// Serializes records through one writer, tagging each with the config hash.
pub struct RecordWriter<W: Write> {
    out: W,
    hash: String,
}

impl<W: Write> RecordWriter<W> {
    /// Writes the schema header and the `config` record built from `config`.
    pub fn new(mut out: W, config: &[(String, String)]) -> Result<Self, HarnessError> {
        let canonical: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let hash = config_hash(&canonical.join("\n"));
        writeln!(out, "{}", schema_header())?;
        let mut rec = Record::new("config").field("config", &hash);
        for (k, v) in config {
            rec = rec.field(k, v);
        }
        writeln!(out, "{}", rec.to_line())?;
        Ok(RecordWriter { out, hash })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, record: Record) -> Result<(), HarnessError> {
        let mut tagged = Record::new(&record.kind).field("config", &self.hash);
        tagged.fields.extend(record.fields);
        writeln!(self.out, "{}", tagged.to_line())?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a whole stream, checking the header version and that every record
/// carries the stream's config hash.
pub fn read_stream(text: &str) -> Result<Vec<Record>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == schema_header() => {}
        _ => return Err(parse_error(1, format!("expected `{}`", schema_header()))),
    }
    let mut out: Vec<Record> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rec = Record::parse(line).map_err(|e| parse_error(i + 1, e.to_string()))?;
        if let Some(first) = out.first() {
            if rec.get("config") != first.get("config") {
                return Err(parse_error(i + 1, "config hash differs from the stream's"));
            }
        }
        out.push(rec);
    }
    Ok(out)
}
