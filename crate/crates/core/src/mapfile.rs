//! Text serialization of calibration maps.
//!
//! ```text
//! isoquant-map 1
//! grid levels=0,0.5,1
//! blocks 2
//! block 0 1 0 2
//! block 2 3 1 2
//! end
//! ```
//!
//! Each `block` line is `score_min score_max level sum_w`. Numbers use the
//! shortest decimal form that parses back to the same `f64`, so the text is
//! canonical: equal maps serialize to identical bytes. Pooled means are not
//! persisted; a loaded block's mean is its level.

use std::fmt::Write as _;

use thiserror::Error;

use crate::block::Block;
use crate::grid::QuantizationGrid;
use crate::map::CalibrationMap;

pub const MAP_MAGIC: &str = "isoquant-map";
pub const MAP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("map format error at line {line}: {message}")]
pub struct MapFormatError {
    pub line: usize,
    pub message: String,
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), MapFormatError> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.trim()))
            }
            None => Err(MapFormatError {
                line: self.last + 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn trailing(&mut self) -> Option<usize> {
        self.lines.find(|(_, l)| !l.trim().is_empty()).map(|(i, _)| i + 1)
    }
}

/// One persisted step of the staircase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    pub score_min: f64,
    pub score_max: f64,
    pub level: f64,
    pub sum_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub grid: QuantizationGrid,
    pub blocks: Vec<BlockRecord>,
}

impl MapFile {
    pub fn from_map(map: &CalibrationMap) -> Self {
        MapFile {
            grid: map.grid().clone(),
            blocks: map
                .blocks()
                .iter()
                .map(|b| BlockRecord {
                    score_min: b.score_min(),
                    score_max: b.score_max(),
                    level: b.level(),
                    sum_w: b.sum_w(),
                })
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        // writing into a String cannot fail
        let _ = writeln!(out, "{MAP_MAGIC} {MAP_VERSION}");
        let _ = writeln!(out, "grid {}", self.grid);
        let _ = writeln!(out, "blocks {}", self.blocks.len());
        for b in &self.blocks {
            let _ = writeln!(out, "block {} {} {} {}", b.score_min, b.score_max, b.level, b.sum_w);
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, MapFormatError> {
        let mut cur = Cursor {
            lines: text.lines().enumerate(),
            last: 0,
        };
        let mut next = |what: &str| cur.next(what);
        let err = |line: usize, message: String| MapFormatError { line, message };

        let (n, header) = next("header")?;
        if header != format!("{MAP_MAGIC} {MAP_VERSION}") {
            return Err(err(n, format!("expected header `{MAP_MAGIC} {MAP_VERSION}`")));
        }
        let (n, grid_line) = next("grid")?;
        let grid = grid_line
            .strip_prefix("grid ")
            .ok_or_else(|| err(n, "expected `grid <spec>`".into()))?
            .parse::<QuantizationGrid>()
            .map_err(|e| err(n, e.to_string()))?;
        let (n, count_line) = next("block count")?;
        let count: usize = count_line
            .strip_prefix("blocks ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| err(n, "expected `blocks <count>`".into()))?;

        let mut blocks = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let (n, line) = next("block record")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 || fields[0] != "block" {
                return Err(err(n, "expected `block <score_min> <score_max> <level> <sum_w>`".into()));
            }
            let mut vals = [0.0; 4];
            for (slot, f) in vals.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(n, format!("{f:?} is not a finite number")))?;
            }
            blocks.push(BlockRecord {
                score_min: vals[0],
                score_max: vals[1],
                level: vals[2],
                sum_w: vals[3],
            });
        }
        let (n, end) = next("`end`")?;
        if end != "end" {
            return Err(err(n, "expected `end`".into()));
        }
        if let Some(n) = cur.trailing() {
            return Err(err(n, "trailing content after `end`".into()));
        }
        let file = MapFile { grid, blocks };
        file.to_map().map_err(|e| err(n, e.to_string()))?;
        Ok(file)
    }

    /// Rebuilds an evaluable map. Each level must be a level of the grid.
    pub fn to_map(&self) -> crate::Result<CalibrationMap> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for r in &self.blocks {
            if self.grid.project(r.level)? != r.level {
                return Err(crate::Error::InvalidInput(format!(
                    "level {} is not on the grid",
                    r.level
                )));
            }
            if !r.sum_w.is_finite() || r.sum_w <= 0.0 || r.score_min > r.score_max {
                return Err(crate::Error::InvalidInput("malformed block record".into()));
            }
            blocks.push(Block::from_parts_unchecked(
                r.level * r.sum_w,
                r.sum_w,
                r.level,
                r.score_min,
                r.score_max,
            ));
        }
        CalibrationMap::new(blocks, self.grid.clone())
    }
}
