//! Samples and pooled blocks.
//!
//! A block keeps its mean as the pair `(sum_wy, sum_w)` so that pooling
//! decisions compare cross products rather than rounded quotients.

use crate::error::{Error, Result};
use crate::grid::QuantizationGrid;

/// One observation: an uncalibrated score, its target and a positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    score: f64,
    target: f64,
    weight: f64,
}

impl Sample {
    pub fn new(score: f64, target: f64, weight: f64) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::InvalidInput(format!("score {score} is not finite")));
        }
        if !target.is_finite() {
            return Err(Error::InvalidInput(format!("target {target} is not finite")));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidInput(format!(
                "weight {weight} must be positive and finite"
            )));
        }
        // -0.0 and 0.0 are the same score
        Ok(Sample {
            score: score + 0.0,
            target,
            weight,
        })
    }

    /// A sample with unit weight.
    pub fn unit(score: f64, target: f64) -> Result<Self> {
        Sample::new(score, target, 1.0)
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// A run of consecutive samples sharing one calibrated level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    sum_wy: f64,
    sum_w: f64,
    level: f64,
    score_min: f64,
    score_max: f64,
}

impl Block {
    /// Builds a block from raw sums; the level is projected from the mean.
    pub fn new(
        sum_wy: f64,
        sum_w: f64,
        score_min: f64,
        score_max: f64,
        grid: &QuantizationGrid,
    ) -> Result<Self> {
        if !(sum_w.is_finite() && sum_w > 0.0) {
            return Err(Error::InvalidInput(format!("block weight {sum_w} must be positive")));
        }
        if !sum_wy.is_finite() || !score_min.is_finite() || !score_max.is_finite() {
            return Err(Error::InvalidInput("block fields must be finite".into()));
        }
        if score_min > score_max {
            return Err(Error::InvalidInput(format!(
                "block extent [{score_min}, {score_max}] is inverted"
            )));
        }
        let level = grid.project(sum_wy / sum_w)?;
        Ok(Block {
            sum_wy,
            sum_w,
            level,
            score_min,
            score_max,
        })
    }

    pub fn from_sample(sample: &Sample, grid: &QuantizationGrid) -> Result<Self> {
        let sum_wy = sample.weight * sample.target;
        if !sum_wy.is_finite() {
            return Err(Error::InvalidInput("weight * target overflows".into()));
        }
        Block::new(sum_wy, sample.weight, sample.score, sample.score, grid)
    }

    pub fn sum_wy(&self) -> f64 {
        self.sum_wy
    }

    pub fn sum_w(&self) -> f64 {
        self.sum_w
    }

    /// Weighted mean of the pooled targets.
    pub fn mean(&self) -> f64 {
        self.sum_wy / self.sum_w
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn score_min(&self) -> f64 {
        self.score_min
    }

    pub fn score_max(&self) -> f64 {
        self.score_max
    }

    pub(crate) fn from_parts_unchecked(
        sum_wy: f64,
        sum_w: f64,
        level: f64,
        score_min: f64,
        score_max: f64,
    ) -> Self {
        Block {
            sum_wy,
            sum_w,
            level,
            score_min,
            score_max,
        }
    }
}

/// Pools two adjacent blocks and re-projects the pooled mean.
pub fn merge_blocks(a: &Block, b: &Block, grid: &QuantizationGrid) -> Result<Block> {
    if a.score_max > b.score_min {
        return Err(Error::Structural(format!(
            "blocks out of score order: [{}, {}] then [{}, {}]",
            a.score_min, a.score_max, b.score_min, b.score_max
        )));
    }
    let sum_wy = a.sum_wy + b.sum_wy;
    let sum_w = a.sum_w + b.sum_w;
    Ok(Block {
        sum_wy,
        sum_w,
        level: grid.project(sum_wy / sum_w)?,
        score_min: a.score_min,
        score_max: b.score_max,
    })
}

/// True when `a`'s mean is at least `b`'s, i.e. the pair violates monotonicity.
pub fn mean_violates(a: &Block, b: &Block) -> bool {
    a.sum_wy * b.sum_w >= b.sum_wy * a.sum_w
}

/// Either pooling trigger: a violation, or both blocks already share a level.
pub(crate) fn needs_join(a: &Block, b: &Block) -> bool {
    mean_violates(a, b) || a.level == b.level
}

/// Pushes `block` onto a fully pooled stack and restores full pooling by
/// joining at the top. Returns the number of joins performed.
pub(crate) fn push_pooled(
    stack: &mut Vec<Block>,
    block: Block,
    grid: &QuantizationGrid,
) -> Result<u64> {
    let mut top = block;
    let mut joins = 0;
    while let Some(prev) = stack.last() {
        if !needs_join(prev, &top) {
            break;
        }
        top = merge_blocks(prev, &top, grid)?;
        stack.pop();
        joins += 1;
    }
    stack.push(top);
    Ok(joins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(levels: &[f64]) -> QuantizationGrid {
        QuantizationGrid::explicit(levels.to_vec()).unwrap()
    }

    fn blk(sum_wy: f64, sum_w: f64, at: f64, g: &QuantizationGrid) -> Block {
        Block::new(sum_wy, sum_w, at, at, g).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(0.0, 1.0, 0.0).is_err());
        assert!(Sample::new(0.0, 1.0, -1.0).is_err());
        assert!(Sample::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(Sample::new(0.0, f64::INFINITY, 1.0).is_err());
        assert!(Sample::new(0.0, 1.0, f64::INFINITY).is_err());
        assert_eq!(Sample::new(-0.0, 1.0, 1.0).unwrap().score().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn merge_arithmetic() {
        let g = grid(&[0.0, 0.5, 1.0]);
        let m = merge_blocks(&blk(0.2, 1.0, 1.0, &g), &blk(0.1, 1.0, 2.0, &g), &g).unwrap();
        assert!((m.sum_wy() - 0.3).abs() < 1e-15);
        assert_eq!(m.sum_w(), 2.0);
        assert!((m.mean() - 0.15).abs() < 1e-15);
        assert_eq!(m.level(), 0.0);
        assert_eq!((m.score_min(), m.score_max()), (1.0, 2.0));

        let m = merge_blocks(&blk(0.9, 1.0, 1.0, &g), &blk(0.1, 1.0, 2.0, &g), &g).unwrap();
        assert_eq!(m.mean(), 0.5);
        assert_eq!(m.level(), 0.5);
    }

    #[test]
    fn merge_tie_goes_low() {
        let g = grid(&[0.0, 1.0]);
        let m = merge_blocks(&blk(0.6, 1.0, 1.0, &g), &blk(0.4, 1.0, 2.0, &g), &g).unwrap();
        assert_eq!(m.mean(), 0.5);
        assert_eq!(m.level(), 0.0);
    }

    #[test]
    fn merge_rejects_out_of_order() {
        let g = grid(&[0.0, 1.0]);
        let err = merge_blocks(&blk(0.1, 1.0, 2.0, &g), &blk(0.1, 1.0, 1.0, &g), &g);
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn violation_rule() {
        let g = grid(&[0.0, 1.0]);
        assert!(mean_violates(&blk(0.9, 1.0, 1.0, &g), &blk(0.1, 1.0, 2.0, &g)));
        assert!(!mean_violates(&blk(0.1, 1.0, 1.0, &g), &blk(0.9, 1.0, 2.0, &g)));
        assert!(mean_violates(&blk(0.5, 1.0, 1.0, &g), &blk(0.5, 1.0, 2.0, &g)));
        // scale-free: mean 0.5 at weight 4 vs mean 0.5 at weight 1
        assert!(mean_violates(&blk(2.0, 4.0, 1.0, &g), &blk(0.5, 1.0, 2.0, &g)));
    }

    #[test]
    fn push_pooled_applies_both_triggers() {
        let g = grid(&[0.0, 1.0]);
        let mut stack = vec![blk(0.1, 1.0, 1.0, &g)];
        // increasing means, same level
        assert_eq!(push_pooled(&mut stack, blk(0.2, 1.0, 2.0, &g), &g).unwrap(), 1);
        assert_eq!(stack.len(), 1);
        assert_eq!(push_pooled(&mut stack, blk(0.9, 1.0, 3.0, &g), &g).unwrap(), 0);
        assert_eq!(stack.len(), 2);
    }

    proptest! {
        #[test]
        fn merge_is_associative(v in prop::collection::vec((-8i32..8, 1u8..5), 3)) {
            // dyadic inputs keep every sum exact
            let g = grid(&[-1.0, 0.0, 1.0]);
            let b: Vec<Block> = v.iter().enumerate()
                .map(|(i, &(y, w))| blk(y as f64 / 4.0 * w as f64, w as f64, i as f64, &g))
                .collect();
            let left = merge_blocks(&merge_blocks(&b[0], &b[1], &g).unwrap(), &b[2], &g).unwrap();
            let right = merge_blocks(&b[0], &merge_blocks(&b[1], &b[2], &g).unwrap(), &g).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn violation_matches_mean_comparison(ya in -64i32..64, wa in 1u32..16, yb in -64i32..64, wb in 1u32..16) {
            let g = grid(&[0.0]);
            let a = blk(ya as f64, wa as f64, 0.0, &g);
            let b = blk(yb as f64, wb as f64, 1.0, &g);
            // exact rational comparison in integers
            let direct = (ya as i64) * (wb as i64) >= (yb as i64) * (wa as i64);
            prop_assert_eq!(mean_violates(&a, &b), direct);
        }
    }
}
