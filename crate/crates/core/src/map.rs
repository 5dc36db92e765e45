//! The fitted monotone staircase and loss evaluation.

use crate::block::{Block, Sample};
use crate::error::{Error, Result};
use crate::grid::QuantizationGrid;

/// A monotone staircase from scores to grid levels.
///
/// Blocks are ordered by score with disjoint, increasing extents and
/// strictly increasing levels. Scores that fall between two blocks take the
/// level of the nearer block, with the midpoint going right; scores beyond
/// either end clamp to the extreme level.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMap {
    blocks: Vec<Block>,
    grid: QuantizationGrid,
}

impl CalibrationMap {
    pub fn new(blocks: Vec<Block>, grid: QuantizationGrid) -> Result<Self> {
        for b in &blocks {
            if b.score_min() > b.score_max() {
                return Err(Error::InvalidInput("block extent is inverted".into()));
            }
        }
        for w in blocks.windows(2) {
            if w[0].score_max() >= w[1].score_min() {
                return Err(Error::InvalidInput(format!(
                    "block extents overlap: {} then {}",
                    w[0].score_max(),
                    w[1].score_min()
                )));
            }
            if w[0].level() >= w[1].level() {
                return Err(Error::InvalidInput(format!(
                    "levels must strictly increase: {} then {}",
                    w[0].level(),
                    w[1].level()
                )));
            }
        }
        Ok(CalibrationMap { blocks, grid })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn grid(&self) -> &QuantizationGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Calibrated level for an arbitrary score.
    pub fn evaluate(&self, score: f64) -> Result<f64> {
        if self.blocks.is_empty() {
            return Err(Error::NoModel);
        }
        if !score.is_finite() {
            return Err(Error::InvalidInput(format!("score {score} is not finite")));
        }
        let idx = self.blocks.partition_point(|b| b.score_max() < score);
        if idx == self.blocks.len() {
            return Ok(self.blocks[idx - 1].level());
        }
        let here = &self.blocks[idx];
        if idx == 0 || here.score_min() <= score {
            return Ok(here.level());
        }
        let prev = &self.blocks[idx - 1];
        let mid = prev.score_max() + (here.score_min() - prev.score_max()) / 2.0;
        Ok(if score < mid { prev.level() } else { here.level() })
    }

    /// Level of the block whose extent contains `score`, if any.
    pub fn covering_level(&self, score: f64) -> Option<f64> {
        let idx = self.blocks.partition_point(|b| b.score_max() < score);
        self.blocks
            .get(idx)
            .filter(|b| b.score_min() <= score)
            .map(Block::level)
    }

    /// Weighted squared error of the map on `samples`. Every sample's score
    /// must lie inside one of the blocks.
    pub fn loss(&self, samples: &[Sample]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            let z = self.covering_level(s.score()).ok_or_else(|| {
                Error::InvalidInput(format!("score {} is not covered by the map", s.score()))
            })?;
            total += s.weight() * (s.target() - z).powi(2);
        }
        Ok(total)
    }
}

/// Free-function form of [`CalibrationMap::evaluate`].
pub fn evaluate_map(map: &CalibrationMap, score: f64) -> Result<f64> {
    map.evaluate(score)
}

/// Weighted squared error of an explicit per-sample assignment.
pub fn total_loss(assignment: &[f64], samples: &[Sample]) -> Result<f64> {
    if assignment.len() != samples.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} of {} samples",
            assignment.len(),
            samples.len()
        )));
    }
    Ok(samples
        .iter()
        .zip(assignment)
        .map(|(s, z)| s.weight() * (s.target() - z).powi(2))
        .sum())
}
