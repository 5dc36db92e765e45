//! Optimal weighted L2 isotonic regression onto a quantized set of levels.
//!
//! Three solvers produce the same optimal staircase:
//!
//! * [`batch::fit_batch`] pools adjacent violators over sorted samples;
//! * [`prefix::PrefixState`] updates the fit as samples arrive in score order;
//! * [`mergetree::MergeTree`] accepts samples in any order, touching a
//!   logarithmic number of nodes per insertion.
//!
//! [`oracle`] holds exact reference solvers used to check all three.
//!
//! ```
//! use isoquant::{fit_batch, MapFile, MergeTree, QuantizationGrid, Sample};
//!
//! let grid: QuantizationGrid = "levels=0,0.5,1".parse()?;
//! let samples = vec![Sample::unit(1.0, 0.9)?, Sample::unit(2.0, 0.1)?, Sample::unit(3.0, 0.5)?];
//! let map = fit_batch(&samples, &grid)?;
//! assert_eq!(map.evaluate(2.5)?, 0.5);
//!
//! let mut tree = MergeTree::new(grid);
//! for s in samples.iter().rev() {
//!     tree.insert(*s)?;
//! }
//! let text = |m: &isoquant::CalibrationMap| MapFile::from_map(m).to_text();
//! assert_eq!(text(&tree.root_map()?), text(&map));
//! # Ok::<(), isoquant::Error>(())
//! ```

pub mod batch;
pub mod bench;
pub mod block;
pub mod cli;
pub mod error;
pub mod grid;
pub mod input;
pub mod map;
pub mod mapfile;
pub mod mergetree;
pub mod oracle;
pub mod prefix;

pub use batch::{fit_batch, fit_batch_with_stats, sort_and_coalesce, BatchFit};
pub use block::{mean_violates, merge_blocks, Block, Sample};
pub use error::{Error, Result};
pub use grid::{project_to_grid, QuantizationGrid};
pub use map::{evaluate_map, total_loss, CalibrationMap};
pub use mapfile::{MapFile, MapFormatError};
pub use mergetree::{merge_summaries, MergeTree, Propagation, SetSummary, UpdateStats};
pub use prefix::{push_ordered, PrefixState};
