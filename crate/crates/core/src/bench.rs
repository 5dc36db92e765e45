//! Complexity harness for the merge tree: insert shuffled synthetic samples
//! and record depth, per-insert node updates and merge work.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::Sample;
use crate::error::Result;
use crate::grid::QuantizationGrid;
use crate::mergetree::MergeTree;

pub const REPORT_HEADER: &str = "N,depth,median_touched,max_touched,merge_work,seconds";

/// Slack added to `2 * depth` when bounding per-insert node updates.
pub const TOUCHED_SLACK: u64 = 8;

/// Depth envelope as a multiple of `log2 N`.
pub const DEPTH_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub depth: u32,
    pub median_touched: u64,
    pub max_touched: u64,
    pub merge_work: u64,
    pub seconds: f64,
}

impl BenchRow {
    pub fn depth_ok(&self) -> bool {
        self.n < 2 || self.depth as f64 <= DEPTH_FACTOR * (self.n as f64).log2()
    }

    pub fn touched_ok(&self) -> bool {
        self.max_touched <= 2 * self.depth as u64 + TOUCHED_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub seed: u64,
    pub grid: QuantizationGrid,
    pub rows: Vec<BenchRow>,
}

/// Synthetic stream of distinct scores in random order. Targets follow the
/// score with uniform noise so the fit has real structure.
pub fn synthetic_samples(n: usize, rng: &mut impl Rng) -> Vec<Sample> {
    let mut scores: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    scores.shuffle(rng);
    scores
        .into_iter()
        .map(|x| {
            let y = 0.5 * x + 0.5 * rng.random::<f64>();
            Sample::unit(x, y).expect("finite synthetic sample")
        })
        .collect()
}

pub fn run_one(n: usize, grid: &QuantizationGrid, rng: &mut impl Rng) -> Result<BenchRow> {
    let samples = synthetic_samples(n, rng);
    let mut tree = MergeTree::new(grid.clone());
    let mut touched = Vec::with_capacity(n);
    let start = Instant::now();
    for s in samples {
        touched.push(tree.insert(s)?.nodes_touched);
    }
    let seconds = start.elapsed().as_secs_f64();
    touched.sort_unstable();
    let stats = tree.stats();
    Ok(BenchRow {
        n,
        depth: stats.depth,
        median_touched: touched.get(touched.len() / 2).copied().unwrap_or(0),
        max_touched: stats.max_nodes_touched,
        merge_work: stats.merge_work,
        seconds,
    })
}

pub fn run_bench(sizes: &[usize], grid: &QuantizationGrid, seed: u64) -> Result<BenchReport> {
    let mut rows = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        // one independent stream per requested size
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        rows.push(run_one(n, grid, &mut rng)?);
    }
    Ok(BenchReport {
        seed,
        grid: grid.clone(),
        rows,
    })
}

/// Least-squares slope of `y` against `x`; `None` without two distinct `x`.
pub fn fitted_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl BenchReport {
    /// Slope of `max_touched` against `log2 N`.
    pub fn touched_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| ((r.n as f64).log2(), r.max_touched as f64))
            .collect();
        fitted_slope(&pts)
    }

    /// Rows breaking the depth or traversal envelope.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !r.depth_ok() {
                out.push(format!(
                    "N={}: depth {} exceeds {DEPTH_FACTOR}*log2(N) = {:.2}",
                    r.n,
                    r.depth,
                    DEPTH_FACTOR * (r.n as f64).log2()
                ));
            }
            if !r.touched_ok() {
                out.push(format!(
                    "N={}: max touched {} exceeds 2*depth+{TOUCHED_SLACK} = {}",
                    r.n,
                    r.max_touched,
                    2 * r.depth as u64 + TOUCHED_SLACK
                ));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed={} grid={}\n{REPORT_HEADER}\n", self.seed, self.grid);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                r.n, r.depth, r.median_touched, r.max_touched, r.merge_work, r.seconds
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid16() -> QuantizationGrid {
        QuantizationGrid::explicit((0..16).map(|i| i as f64 / 15.0).collect()).unwrap()
    }

    #[test]
    fn single_sample_is_trivial() {
        let r = run_bench(&[1], &grid16(), 7).unwrap();
        let row = &r.rows[0];
        assert_eq!((row.depth, row.median_touched, row.max_touched, row.merge_work), (1, 1, 1, 0));
    }

    #[test]
    fn one_row_per_size() {
        let report = run_bench(&[1, 10, 100], &grid16(), 3).unwrap();
        let csv = report.to_csv();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], REPORT_HEADER);
        assert!(csv.starts_with("# seed=3 "));
        assert!(report.violations().is_empty());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = run_bench(&[500], &grid16(), 11).unwrap();
        let b = run_bench(&[500], &grid16(), 11).unwrap();
        assert_eq!(a.rows[0].depth, b.rows[0].depth);
        assert_eq!(a.rows[0].merge_work, b.rows[0].merge_work);
    }

    #[test]
    fn slope_of_a_line() {
        let s = fitted_slope(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(fitted_slope(&[(1.0, 1.0)]), None);
    }
}
