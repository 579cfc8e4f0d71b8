use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One time-marked unit: `utt_id channel start_sec dur_sec unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmRow {
    pub utt_id: String,
    pub channel: String,
    pub start: f64,
    pub duration: f64,
    pub unit: String,
}

impl CtmRow {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Parses whitespace-separated CTM text; blank lines and `;;` comments are
/// skipped.
pub fn parse_ctm(text: &str) -> Result<Vec<CtmRow>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 5 {
            return Err(Error::Data(format!("CTM line {}: expected 5 fields, got {}", n + 1, f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Data(format!("CTM line {}: bad number '{s}'", n + 1)))
        };
        rows.push(CtmRow {
            utt_id: f[0].to_string(),
            channel: f[1].to_string(),
            start: num(f[2])?,
            duration: num(f[3])?,
            unit: f[4].to_string(),
        });
    }
    Ok(rows)
}

/// Formats rows with times to 3 decimal places.
pub fn format_ctm(rows: &[CtmRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{} {} {:.3} {:.3} {}", r.utt_id, r.channel, r.start, r.duration, r.unit);
    }
    out
}
