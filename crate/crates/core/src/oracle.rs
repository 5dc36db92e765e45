//! Exact reference solvers for quantized isotonic regression.
//!
//! Both solvers work on a finite level list and share nothing with the
//! pooling code paths: the dynamic program walks (score group, level) states
//! and the enumerator tries every monotone assignment. Samples with equal
//! scores form one group and are forced onto one level.

use crate::block::Sample;
use crate::error::{Error, Result};
use crate::grid::QuantizationGrid;

/// Largest number of monotone assignments [`enumerate_exact`] will visit.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Candidate lists longer than this are refused.
pub const MAX_ORACLE_LEVELS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub min_loss: f64,
    /// One level per input sample, in input order.
    pub assignment: Vec<f64>,
}

fn check_inputs(samples: &[Sample], levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("oracle needs at least one level".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("oracle levels must be finite and strictly increasing".into()));
    }
    if samples.windows(2).any(|w| w[0].score() > w[1].score()) {
        return Err(Error::InvalidInput("oracle samples must be sorted by score".into()));
    }
    Ok(())
}

/// Runs of equal score, as index ranges into `samples`.
fn score_groups(samples: &[Sample]) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=samples.len() {
        if i == samples.len() || samples[i].score() != samples[start].score() {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

fn group_cost(samples: &[Sample], level: f64) -> f64 {
    samples
        .iter()
        .fold(0.0, |acc, s| acc + s.weight() * (s.target() - level).powi(2))
}

fn expand(groups: &[std::ops::Range<usize>], chosen: &[usize], levels: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (g, &q) in groups.iter().zip(chosen) {
        for slot in &mut out[g.clone()] {
            *slot = levels[q];
        }
    }
    out
}

/// Dynamic program over `best[g][q]`, the least loss of groups `0..=g` with
/// group `g` on level `q`. Prefix minima keep each stage linear in the
/// number of levels. Ties resolve towards lower levels.
pub fn dp_exact(sorted_samples: &[Sample], levels: &[f64]) -> Result<OracleSolution> {
    check_inputs(sorted_samples, levels)?;
    if sorted_samples.is_empty() {
        return Ok(OracleSolution { min_loss: 0.0, assignment: vec![] });
    }
    let groups = score_groups(sorted_samples);
    let m = levels.len();
    // back[g][q]: predecessor level chosen for group g - 1 when group g sits at q
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    let mut best: Vec<f64> = levels
        .iter()
        .map(|&l| group_cost(&sorted_samples[groups[0].clone()], l))
        .collect();
    back.push(vec![0; m]);
    for g in &groups[1..] {
        let slice = &sorted_samples[g.clone()];
        let mut run_min = f64::INFINITY;
        let mut run_arg = 0;
        let mut next = Vec::with_capacity(m);
        let mut arg = Vec::with_capacity(m);
        for (q, &l) in levels.iter().enumerate() {
            if best[q] < run_min {
                run_min = best[q];
                run_arg = q;
            }
            next.push(group_cost(slice, l) + run_min);
            arg.push(run_arg);
        }
        best = next;
        back.push(arg);
    }
    let (mut q, min_loss) = best
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bq, bv), (q, &v)| if v < bv { (q, v) } else { (bq, bv) });
    let mut chosen = vec![0; groups.len()];
    for g in (0..groups.len()).rev() {
        chosen[g] = q;
        q = back[g][q];
    }
    Ok(OracleSolution {
        min_loss,
        assignment: expand(&groups, &chosen, levels, sorted_samples.len()),
    })
}

/// Number of nondecreasing sequences of length `n` over `m` levels,
/// saturating once it passes `cap`.
fn monotone_count(n: u64, m: u64, cap: u64) -> u64 {
    // C(n + m - 1, n), built incrementally as C(m - 1 + k, k)
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * (m as u128 - 1 + k) / k;
        if c > cap as u128 {
            return cap + 1;
        }
    }
    c as u64
}

/// Brute force over every monotone assignment of levels to score groups.
pub fn enumerate_exact(sorted_samples: &[Sample], levels: &[f64]) -> Result<OracleSolution> {
    check_inputs(sorted_samples, levels)?;
    let groups = score_groups(sorted_samples);
    let count = monotone_count(groups.len() as u64, levels.len() as u64, ENUMERATION_LIMIT);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "{} groups over {} levels exceed {ENUMERATION_LIMIT} assignments",
            groups.len(),
            levels.len()
        )));
    }
    let costs: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| levels.iter().map(|&l| group_cost(&sorted_samples[g.clone()], l)).collect())
        .collect();

    let mut best_loss = f64::INFINITY;
    let mut best: Vec<usize> = vec![0; groups.len()];
    let mut current: Vec<usize> = vec![0; groups.len()];

    fn walk(
        g: usize,
        floor: usize,
        acc: f64,
        costs: &[Vec<f64>],
        current: &mut Vec<usize>,
        best: &mut Vec<usize>,
        best_loss: &mut f64,
    ) {
        if g == costs.len() {
            if acc < *best_loss {
                *best_loss = acc;
                best.clone_from(current);
            }
            return;
        }
        for q in floor..costs[g].len() {
            current[g] = q;
            walk(g + 1, q, acc + costs[g][q], costs, current, best, best_loss);
        }
    }

    if groups.is_empty() {
        return Ok(OracleSolution { min_loss: 0.0, assignment: vec![] });
    }
    // the first stage seeds the accumulator so sums run in the same order as the DP
    for q in 0..levels.len() {
        current[0] = q;
        walk(1, q, costs[0][q], &costs, &mut current, &mut best, &mut best_loss);
    }
    Ok(OracleSolution {
        min_loss: best_loss,
        assignment: expand(&groups, &best, levels, sorted_samples.len()),
    })
}

/// Finite level list on which the oracles can solve for `grid`.
///
/// Explicit grids are used as is. For a lattice, no optimal level lies
/// outside the projections of the smallest and largest target, so the
/// lattice points from one step below the former to one step above the
/// latter suffice (clamped to the lattice bounds).
pub fn oracle_levels(grid: &QuantizationGrid, samples: &[Sample]) -> Result<Vec<f64>> {
    match grid {
        QuantizationGrid::Explicit(e) => Ok(e.levels().to_vec()),
        QuantizationGrid::Lattice(l) => {
            if samples.is_empty() {
                return Err(Error::NoData);
            }
            let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.target()), hi.max(s.target()))
            });
            let mut k_lo = ((lo - l.offset()) / l.step()).floor() - 1.0;
            let mut k_hi = ((hi - l.offset()) / l.step()).ceil() + 1.0;
            if let Some(b) = l.min_index() {
                k_lo = k_lo.max(b as f64);
                k_hi = k_hi.max(b as f64);
            }
            if let Some(b) = l.max_index() {
                k_lo = k_lo.min(b as f64);
                k_hi = k_hi.min(b as f64);
            }
            let span = k_hi - k_lo;
            if span.is_nan() || span >= MAX_ORACLE_LEVELS as f64 {
                return Err(Error::TooLarge("lattice spans too many candidate levels".into()));
            }
            Ok((k_lo as i64..=k_hi as i64).map(|k| l.level_at(k)).collect())
        }
    }
}
