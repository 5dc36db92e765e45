//! Streaming calibrator for samples that arrive in nondecreasing score order.
//!
//! Each push appends a block and joins at the top of the stack while the top
//! pair violates monotonicity or shares a level. Joined equal-level blocks
//! never need to be split again as long as later samples sit strictly to the
//! right, so the stack never holds more blocks than the grid has levels.
//!
//! A repeated score changes an existing point rather than adding a new one,
//! which can undo an earlier equal-level join. The samples at the latest
//! score are therefore held in an open block and only pooled into the stack
//! once a strictly larger score arrives.

use crate::block::{merge_blocks, push_pooled, Block, Sample};
use crate::error::{Error, Result};
use crate::grid::QuantizationGrid;
use crate::map::CalibrationMap;

#[derive(Debug, Clone)]
pub struct PrefixState {
    grid: QuantizationGrid,
    stack: Vec<Block>,
    // every sample seen at the latest score
    open: Option<Block>,
    joins: u64,
    pushes: u64,
}

impl PrefixState {
    pub fn new(grid: QuantizationGrid) -> Self {
        PrefixState {
            grid,
            stack: Vec::new(),
            open: None,
            joins: 0,
            pushes: 0,
        }
    }

    pub fn grid(&self) -> &QuantizationGrid {
        &self.grid
    }

    /// Current groups, lowest score first.
    pub fn blocks(&self) -> Vec<Block> {
        let mut view = self.stack.clone();
        if let Some(open) = self.open {
            // cannot fail: the open block lies strictly right of the stack
            push_pooled(&mut view, open, &self.grid).expect("ordered blocks");
        }
        view
    }

    pub fn last_score(&self) -> Option<f64> {
        self.open.map(|b| b.score_max())
    }

    /// Total joins performed so far.
    pub fn join_count(&self) -> u64 {
        self.joins
    }

    pub fn push_count(&self) -> u64 {
        self.pushes
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_none()
    }

    /// Appends a sample whose score is at least the previous one.
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        let block = Block::from_sample(&sample, &self.grid)?;
        self.open = Some(match self.open {
            None => block,
            Some(open) if sample.score() < open.score_max() => {
                return Err(Error::OrderingViolation {
                    score: sample.score(),
                    last: open.score_max(),
                });
            }
            Some(open) if sample.score() == open.score_max() => {
                self.joins += 1;
                merge_blocks(&open, &block, &self.grid)?
            }
            Some(open) => {
                self.joins += push_pooled(&mut self.stack, open, &self.grid)?;
                block
            }
        });
        self.pushes += 1;
        Ok(())
    }

    /// Immutable copy of the current staircase.
    pub fn snapshot(&self) -> Result<CalibrationMap> {
        if self.is_empty() {
            return Err(Error::NoData);
        }
        CalibrationMap::new(self.blocks(), self.grid.clone())
    }
}

/// Consuming form of [`PrefixState::push`].
pub fn push_ordered(mut state: PrefixState, sample: Sample) -> Result<PrefixState> {
    state.push(sample)?;
    Ok(state)
}
