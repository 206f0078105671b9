//! Raw stream logs: one line per reading, `t_ms,s1,...,s8`, left sensors
//! 1–4 then right sensors 1–4. Lines starting with `#` are comments.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sensor::{RawSample, SENSORS_PER_MODULE};

pub const CHANNELS: usize = 2 * SENSORS_PER_MODULE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamRecord {
    pub timestamp_ms: u64,
    pub values: [f64; CHANNELS],
}

impl StreamRecord {
    pub fn left(&self) -> RawSample {
        self.module(0)
    }

    pub fn right(&self) -> RawSample {
        self.module(1)
    }

    fn module(&self, m: usize) -> RawSample {
        let mut v = [0.0; SENSORS_PER_MODULE];
        v.copy_from_slice(&self.values[m * SENSORS_PER_MODULE..(m + 1) * SENSORS_PER_MODULE]);
        RawSample::new(v)
            .expect("stream values are finite")
            .with_timestamp(self.timestamp_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedStream {
    pub records: Vec<StreamRecord>,
    pub rejected: Vec<MalformedLine>,
}

fn parse_line(line: &str) -> std::result::Result<StreamRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != CHANNELS + 1 {
        return Err(format!("expected {} fields, found {}", CHANNELS + 1, fields.len()));
    }
    let timestamp_ms = fields[0]
        .parse::<u64>()
        .map_err(|e| format!("timestamp {:?}: {e}", fields[0]))?;
    let mut values = [0.0; CHANNELS];
    for (v, f) in values.iter_mut().zip(&fields[1..]) {
        *v = f.parse::<f64>().map_err(|e| format!("value {f:?}: {e}"))?;
        if !v.is_finite() {
            return Err(format!("non-finite value {f:?}"));
        }
    }
    Ok(StreamRecord { timestamp_ms, values })
}

/// Parses a stream log. Bad lines are collected rather than fatal; a line
/// whose timestamp goes backwards is rejected too.
pub fn parse_stream(text: &str) -> Result<ParsedStream> {
    let mut records: Vec<StreamRecord> = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Ok(r) => match records.last() {
                Some(prev) if r.timestamp_ms < prev.timestamp_ms => rejected.push(MalformedLine {
                    line: i + 1,
                    reason: format!("timestamp {} precedes {}", r.timestamp_ms, prev.timestamp_ms),
                }),
                _ => records.push(r),
            },
            Err(reason) => rejected.push(MalformedLine { line: i + 1, reason }),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(ParsedStream { records, rejected })
}

pub fn render_stream(records: &[StreamRecord]) -> String {
    let mut out = String::from("# t_ms,l1,l2,l3,l4,r1,r2,r3,r4\n");
    for r in records {
        write!(out, "{}", r.timestamp_ms).unwrap();
        for v in r.values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
