//! Quantization grids: the set of values a calibrated output may take.
//!
//! Two shapes are supported. An explicit grid is a finite, strictly
//! increasing list of levels. A lattice is `offset + k * step` for integer
//! `k`, optionally restricted to the levels lying inside `[lower, upper]`.
//!
//! Projection picks the nearest level. Exact ties go to the lower level and
//! values outside the grid clamp to the extreme level, which keeps the
//! projection nondecreasing in its argument.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Lattice indices are kept within the range where `i64 -> f64` is exact.
const MAX_LATTICE_INDEX: f64 = (1u64 << 52) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitLevels {
    levels: Vec<f64>,
}

impl ExplicitLevels {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn project(&self, value: f64) -> f64 {
        let levels = &self.levels;
        let idx = levels.partition_point(|&l| l <= value);
        if idx == 0 {
            return levels[0];
        }
        if idx == levels.len() {
            return levels[idx - 1];
        }
        let (lo, hi) = (levels[idx - 1], levels[idx]);
        if hi - value < value - lo {
            hi
        } else {
            lo
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformLattice {
    offset: f64,
    step: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    // index range of the admissible levels, derived from the bounds
    min_index: Option<i64>,
    max_index: Option<i64>,
}

impl UniformLattice {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lower(&self) -> Option<f64> {
        self.lower
    }

    pub fn upper(&self) -> Option<f64> {
        self.upper
    }

    /// Smallest admissible lattice index, if the lattice is bounded below.
    pub fn min_index(&self) -> Option<i64> {
        self.min_index
    }

    /// Largest admissible lattice index, if the lattice is bounded above.
    pub fn max_index(&self) -> Option<i64> {
        self.max_index
    }

    /// The level at lattice index `k`.
    pub fn level_at(&self, k: i64) -> f64 {
        self.offset + k as f64 * self.step
    }

    fn index_estimate(&self, value: f64) -> Result<i64> {
        let t = ((value - self.offset) / self.step).floor();
        if !t.is_finite() || t.abs() > MAX_LATTICE_INDEX {
            return Err(Error::InvalidInput(format!(
                "value {value} lies outside the representable lattice range"
            )));
        }
        Ok(t as i64)
    }

    fn clamp_index(&self, k: i64) -> i64 {
        let k = self.min_index.map_or(k, |lo| k.max(lo));
        self.max_index.map_or(k, |hi| k.min(hi))
    }

    fn project(&self, value: f64) -> Result<f64> {
        if let Some(lo) = self.min_index {
            if value <= self.level_at(lo) {
                return Ok(self.level_at(lo));
            }
        }
        if let Some(hi) = self.max_index {
            if value >= self.level_at(hi) {
                return Ok(self.level_at(hi));
            }
        }
        let mut k = self.index_estimate(value)?;
        // settle rounding in the estimate so that level(k) <= value < level(k + 1)
        while self.level_at(k) > value {
            k -= 1;
        }
        while self.level_at(k + 1) <= value {
            k += 1;
        }
        let (lo, hi) = (self.level_at(k), self.level_at(k + 1));
        let nearest = if hi - value < value - lo { k + 1 } else { k };
        Ok(self.level_at(self.clamp_index(nearest)))
    }
}

/// The quantized codomain of a calibration map.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizationGrid {
    Explicit(ExplicitLevels),
    Lattice(UniformLattice),
}

impl QuantizationGrid {
    /// A finite grid. Levels must be finite and strictly increasing.
    pub fn explicit(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one level".into()));
        }
        if let Some(bad) = levels.iter().find(|l| !l.is_finite()) {
            return Err(Error::InvalidInput(format!("grid level {bad} is not finite")));
        }
        if let Some(w) = levels.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "grid levels must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        // canonical zero so that -0 and 0 serialize identically
        let levels = levels.into_iter().map(|l| l + 0.0).collect();
        Ok(QuantizationGrid::Explicit(ExplicitLevels { levels }))
    }

    /// A uniform lattice `offset + k * step`, optionally bounded.
    pub fn lattice(offset: f64, step: f64, lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidInput("lattice offset must be finite".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput("lattice step must be positive and finite".into()));
        }
        for b in [lower, upper].into_iter().flatten() {
            if !b.is_finite() {
                return Err(Error::InvalidInput("lattice bounds must be finite".into()));
            }
        }
        if let (Some(lo), Some(hi)) = (lower, upper) {
            if lo > hi {
                return Err(Error::InvalidInput(format!(
                    "lattice lower bound {lo} exceeds upper bound {hi}"
                )));
            }
        }
        let mut lattice = UniformLattice {
            offset,
            step,
            lower,
            upper,
            min_index: None,
            max_index: None,
        };
        if let Some(lo) = lower {
            let mut k = lattice.index_estimate(lo)?;
            while lattice.level_at(k) < lo {
                k += 1;
            }
            while lattice.level_at(k - 1) >= lo {
                k -= 1;
            }
            lattice.min_index = Some(k);
        }
        if let Some(hi) = upper {
            let mut k = lattice.index_estimate(hi)?;
            while lattice.level_at(k) > hi {
                k -= 1;
            }
            while lattice.level_at(k + 1) <= hi {
                k += 1;
            }
            lattice.max_index = Some(k);
        }
        if let (Some(lo), Some(hi)) = (lattice.min_index, lattice.max_index) {
            if lo > hi {
                return Err(Error::InvalidInput(
                    "no lattice level lies within the bounds".into(),
                ));
            }
        }
        Ok(QuantizationGrid::Lattice(lattice))
    }

    /// Nearest grid level to `value`; ties resolve to the lower level.
    pub fn project(&self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("cannot project non-finite value {value}")));
        }
        match self {
            QuantizationGrid::Explicit(e) => Ok(e.project(value)),
            QuantizationGrid::Lattice(l) => l.project(value),
        }
    }

    /// Number of levels, or `None` for a lattice unbounded on either side.
    pub fn level_count(&self) -> Option<usize> {
        match self {
            QuantizationGrid::Explicit(e) => Some(e.levels.len()),
            QuantizationGrid::Lattice(l) => match (l.min_index, l.max_index) {
                (Some(lo), Some(hi)) => Some((hi - lo + 1) as usize),
                _ => None,
            },
        }
    }
}

/// Module-level convenience matching the map/grid vocabulary.
pub fn project_to_grid(grid: &QuantizationGrid, value: f64) -> Result<f64> {
    grid.project(value)
}

/// Grid specs: `levels=v1,v2,...` or `lattice=offset:step[:lo:hi]`
/// (either bound may be left empty).
impl FromStr for QuantizationGrid {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |why: &str| Error::InvalidInput(format!("bad grid spec {spec:?}: {why}"));
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("{:?} is not a number", s.trim())))
        };
        if let Some(rest) = spec.strip_prefix("levels=") {
            let levels = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
            QuantizationGrid::explicit(levels)
        } else if let Some(rest) = spec.strip_prefix("lattice=") {
            let parts: Vec<&str> = rest.split(':').collect();
            let bound = |s: &str| -> Result<Option<f64>> {
                if s.trim().is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            match parts.as_slice() {
                [offset, step] => QuantizationGrid::lattice(num(offset)?, num(step)?, None, None),
                [offset, step, lo, hi] => {
                    QuantizationGrid::lattice(num(offset)?, num(step)?, bound(lo)?, bound(hi)?)
                }
                _ => Err(bad("expected lattice=offset:step or lattice=offset:step:lo:hi")),
            }
        } else {
            Err(bad("expected levels=... or lattice=..."))
        }
    }
}

impl fmt::Display for QuantizationGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantizationGrid::Explicit(e) => {
                f.write_str("levels=")?;
                for (i, l) in e.levels.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
            QuantizationGrid::Lattice(l) => {
                write!(f, "lattice={}:{}", l.offset, l.step)?;
                if l.lower.is_some() || l.upper.is_some() {
                    let show = |b: Option<f64>| b.map(|v| v.to_string()).unwrap_or_default();
                    write!(f, ":{}:{}", show(l.lower), show(l.upper))?;
                }
                Ok(())
            }
        }
    }
}
