//! Line-oriented text reports.
//!
//! A report starts with `key<TAB>value` lines. Tables follow, each
//! introduced by a `[name]` line, then a tab-separated header line, then
//! one row per line, and closed by a blank line. Lines starting with `#`
//! are comments. Floating-point values use 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::CliError;
use crate::formats::num;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub scalars: Vec<(String, String)>,
    pub tables: Vec<(String, Table)>,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn scalar(&mut self, key: &str, value: impl ToString) {
        self.scalars.push((key.into(), value.to_string()));
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.scalar(key, num(value));
    }

    pub fn table(&mut self, name: &str, table: Table) {
        self.tables.push((name.into(), table));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.scalars.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        for (k, v) in &self.scalars {
            let _ = writeln!(out, "{k}\t{v}");
        }
        for (name, table) in &self.tables {
            let _ = writeln!(out, "\n[{name}]");
            let _ = writeln!(out, "{}", table.header.join("\t"));
            for row in &table.rows {
                let _ = writeln!(out, "{}", row.join("\t"));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut report = Report::default();
        let mut current: Option<(String, Table)> = None;
        let mut seen = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let bad = |msg: String| CliError::Input(format!("report line {}: {msg}", n + 1));
            if let Some(title) = line.strip_prefix("# ") {
                if report.title.is_empty() {
                    report.title = title.into();
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if line.is_empty() {
                if let Some((name, t)) = current.take() {
                    report.tables.push((name, t));
                }
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if let Some((prev, t)) = current.take() {
                    report.tables.push((prev, t));
                }
                if seen.insert(name.to_string(), ()).is_some() {
                    return Err(bad(format!("duplicate table [{name}]")));
                }
                current = Some((name.into(), Table::default()));
                continue;
            }
            let fields: Vec<String> = line.split('\t').map(String::from).collect();
            match current.as_mut() {
                Some((_, t)) if t.header.is_empty() => t.header = fields,
                Some((name, t)) => {
                    if fields.len() != t.header.len() {
                        return Err(bad(format!("[{name}] row has {} fields, header has {}", fields.len(), t.header.len())));
                    }
                    t.rows.push(fields);
                }
                None => {
                    let [k, v] = <[String; 2]>::try_from(fields).map_err(|_| bad("expected key<TAB>value".into()))?;
                    report.scalars.push((k, v));
                }
            }
        }
        if let Some((name, t)) = current.take() {
            report.tables.push((name, t));
        }
        Ok(report)
    }
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Input(format!("{what}: '{s}' is not a number")))
}

pub fn parse_usize(s: &str, what: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::Input(format!("{what}: '{s}' is not a count")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut r = Report::new("test report");
        r.scalar("rows", 3);
        r.real("free_energy", -1.0 / 3.0);
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), num(0.1)]);
        t.push(vec!["2".into(), num(2.5)]);
        r.table("values", t);
        r.table("empty", Table::new(&["x"]));
        let parsed = Report::parse(&r.render()).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(parse_f64(parsed.get("free_energy").unwrap(), "F").unwrap(), -1.0 / 3.0);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(Report::parse("[t]\na\tb\n1\n").is_err());
        assert!(Report::parse("key only\n").is_err());
    }
}
