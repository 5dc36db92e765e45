//! CSV sample ingestion: `score,target[,weight]` per line, weight defaulting
//! to 1. Blank lines and lines starting with `#` are skipped.

use std::io::{BufRead, BufReader, Lines, Read};

use thiserror::Error;

use crate::block::Sample;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Streams samples from CSV text, one line at a time.
pub struct SampleReader<R: Read> {
    lines: Lines<BufReader<R>>,
    line: u64,
}

impl<R: Read> SampleReader<R> {
    pub fn new(reader: R) -> Self {
        SampleReader {
            lines: BufReader::new(reader).lines(),
            line: 0,
        }
    }
}

fn field(raw: &str, name: &str, line: u64) -> Result<f64, InputError> {
    raw.parse::<f64>().map_err(|_| InputError::Malformed {
        line,
        message: format!("{name} {raw:?} is not a number"),
    })
}

impl<R: Read> Iterator for SampleReader<R> {
    /// The 1-based line number alongside each sample.
    type Item = Result<(u64, Sample), InputError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            let trimmed = text.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(parse_line(trimmed, self.line).map(|s| (self.line, s)));
        }
    }
}

fn parse_line(text: &str, line: u64) -> Result<Sample, InputError> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if !(2..=3).contains(&fields.len()) {
        return Err(InputError::Malformed {
            line,
            message: format!("expected score,target[,weight], found {} fields", fields.len()),
        });
    }
    let score = field(fields[0], "score", line)?;
    let target = field(fields[1], "target", line)?;
    let weight = match fields.get(2) {
        Some(raw) => field(raw, "weight", line)?,
        None => 1.0,
    };
    Sample::new(score, target, weight).map_err(|e| InputError::Malformed {
        line,
        message: e.to_string(),
    })
}

/// Reads every sample; the first bad line aborts.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<Sample>, InputError> {
    SampleReader::new(reader).map(|r| r.map(|(_, s)| s)).collect()
}
