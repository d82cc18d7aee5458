//! `key=value` reports and the residual gates that decide exit status.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "# cce report v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key, value.into().replace('\n', " ")));
    }

    /// Shortest representation that parses back to the same bits.
    pub fn num(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, format!("{value:?}"));
    }

    pub fn int(&mut self, key: impl Into<String>, value: i64) {
        self.push(key, value.to_string());
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.push(key, value.to_string());
    }

    pub fn extend_numbers(&mut self, prefix: &str, items: impl IntoIterator<Item = (String, f64)>) {
        for (k, v) in items {
            self.num(format!("{prefix}{k}"), v);
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{REPORT_HEADER}").unwrap();
        for (k, v) in &self.entries {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.render().as_bytes())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut r = Report::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("report line {} has no '='", i + 1)))?;
            r.push(k, v);
        }
        Ok(r)
    }
}

/// A residual compared with its limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Gate {
    /// Passes when `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Gate {
        Gate {
            name: name.into(),
            value,
            limit,
            passed: value < limit,
        }
    }

    /// Passes when `value > limit`; used by negative controls.
    pub fn above(name: &str, value: f64, limit: f64) -> Gate {
        Gate {
            name: name.into(),
            value,
            limit,
            passed: value > limit,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Gate {
        Gate {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            limit: 0.5,
            passed: ok,
        }
    }

    pub fn record(&self, report: &mut Report) {
        report.push(format!("gate.{}", self.name), if self.passed { "pass" } else { "fail" });
        report.num(format!("gate.{}.value", self.name), self.value);
        report.num(format!("gate.{}.limit", self.name), self.limit);
    }
}
