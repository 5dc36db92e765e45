//! Command-line front end: `fit`, `stream`, `apply` and `bench`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::batch::fit_batch_with_stats;
use crate::bench::run_bench;
use crate::block::Sample;
use crate::grid::QuantizationGrid;
use crate::input::{read_samples, SampleReader};
use crate::map::CalibrationMap;
use crate::mapfile::MapFile;
use crate::mergetree::MergeTree;
use crate::prefix::PrefixState;

#[derive(Debug, Parser)]
#[command(name = "isoquant", version, about = "Quantized isotonic calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamMode {
    /// Scores arrive in nondecreasing order.
    Ordered,
    /// Scores arrive in any order.
    Unordered,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Batch fit a CSV of `score,target[,weight]` rows.
    Fit {
        /// Input CSV; stdin when omitted or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// `levels=v1,v2,...` or `lattice=offset:step[:lo:hi]`.
        #[arg(long)]
        grid: String,
        /// Map file to write; stdout when omitted or `-`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit one sample at a time and write the final map.
    Stream {
        #[arg(long, value_enum)]
        mode: StreamMode,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Report `n`, group count and loss to stderr every this many samples.
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Calibrate scores (first CSV field per line) with a saved map.
    Apply {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure merge-tree depth and per-insert work at several sizes.
    Bench {
        /// Comma separated sample counts.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value = DEFAULT_BENCH_GRID)]
        grid: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report CSV; stdout when omitted or `-`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Sixteen evenly spaced levels on [0, 1].
pub const DEFAULT_BENCH_GRID: &str =
    "levels=0,0.06666666666666667,0.13333333333333333,0.2,0.26666666666666666,0.3333333333333333,0.4,0.4666666666666667,0.5333333333333333,0.6,0.6666666666666666,0.7333333333333333,0.8,0.8666666666666667,0.9333333333333333,1";

fn is_stdio(path: &Option<PathBuf>) -> bool {
    path.as_deref().is_none_or(|p| p == Path::new("-"))
}

fn open_input(path: &Option<PathBuf>) -> Result<Box<dyn Read>> {
    if is_stdio(path) {
        return Ok(Box::new(io::stdin().lock()));
    }
    let path = path.as_ref().expect("checked above");
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if is_stdio(path) {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())?;
        return Ok(out.flush()?);
    }
    let path = path.as_ref().expect("checked above");
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn parse_grid(spec: &str) -> Result<QuantizationGrid> {
    spec.parse::<QuantizationGrid>()
        .map_err(|e| anyhow!("{e} (usage: levels=v1,v2,... or lattice=offset:step[:lo:hi])"))
}

fn summary_line(n: u64, map: &CalibrationMap, loss: Option<f64>) -> String {
    match loss {
        Some(loss) => format!("n={n} groups={} loss={loss}", map.len()),
        None => format!("n={n} groups={}", map.len()),
    }
}

pub fn cmd_fit(input: &Option<PathBuf>, grid: &str, output: &Option<PathBuf>) -> Result<()> {
    let grid = parse_grid(grid)?;
    let samples = read_samples(open_input(input)?)?;
    if samples.is_empty() {
        bail!("no data: the input holds no samples");
    }
    let fit = fit_batch_with_stats(&samples, &grid)?;
    let loss = fit.map.loss(&samples)?;
    write_output(output, &MapFile::from_map(&fit.map).to_text())?;
    eprintln!("{}", summary_line(samples.len() as u64, &fit.map, Some(loss)));
    Ok(())
}

enum Streamer {
    Ordered(PrefixState),
    Unordered(MergeTree),
}

impl Streamer {
    fn push(&mut self, s: Sample) -> crate::Result<()> {
        match self {
            Streamer::Ordered(p) => p.push(s),
            Streamer::Unordered(t) => t.insert(s).map(|_| ()),
        }
    }

    fn map(&self) -> crate::Result<CalibrationMap> {
        match self {
            Streamer::Ordered(p) => p.snapshot(),
            Streamer::Unordered(t) => t.root_map(),
        }
    }
}

pub fn cmd_stream(
    mode: StreamMode,
    grid: &str,
    input: &Option<PathBuf>,
    output: &Option<PathBuf>,
    snapshot_every: Option<u64>,
) -> Result<()> {
    let grid = parse_grid(grid)?;
    if snapshot_every == Some(0) {
        bail!("--snapshot-every must be positive");
    }
    let mut streamer = match mode {
        StreamMode::Ordered => Streamer::Ordered(PrefixState::new(grid)),
        StreamMode::Unordered => Streamer::Unordered(MergeTree::new(grid)),
    };
    // samples are only retained when per-step losses are requested
    let mut seen: Vec<Sample> = Vec::new();
    let mut n = 0u64;
    for item in SampleReader::new(open_input(input)?) {
        let (line, sample) = item?;
        streamer
            .push(sample)
            .map_err(|e| anyhow!("line {line}: {e}"))?;
        n += 1;
        if let Some(every) = snapshot_every {
            seen.push(sample);
            if n.is_multiple_of(every) {
                let map = streamer.map()?;
                eprintln!("snapshot {}", summary_line(n, &map, Some(map.loss(&seen)?)));
            }
        }
    }
    if n == 0 {
        bail!("no data: the input holds no samples");
    }
    let map = streamer.map()?;
    write_output(output, &MapFile::from_map(&map).to_text())?;
    let loss = snapshot_every.map(|_| map.loss(&seen)).transpose()?;
    eprintln!("{}", summary_line(n, &map, loss));
    Ok(())
}

pub fn cmd_apply(map: &Path, input: &Option<PathBuf>, output: &Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(map).with_context(|| format!("cannot read {}", map.display()))?;
    let map = MapFile::parse(&text)?.to_map()?;
    let reader = BufReader::new(open_input(input)?);
    let mut out: Box<dyn Write> = if is_stdio(output) {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        let path = output.as_ref().expect("checked above");
        Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        ))
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let raw = trimmed.split(',').next().unwrap_or("").trim();
        let score: f64 = raw
            .parse()
            .map_err(|_| anyhow!("line {}: score {raw:?} is not a number", i + 1))?;
        let level = map.evaluate(score).map_err(|e| anyhow!("line {}: {e}", i + 1))?;
        writeln!(out, "{level}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_bench(sizes: &[usize], grid: &str, seed: u64, output: &Option<PathBuf>) -> Result<()> {
    let grid = parse_grid(grid)?;
    if sizes.contains(&0) {
        bail!("every size must be positive");
    }
    let report = run_bench(sizes, &grid, seed)?;
    write_output(output, &report.to_csv())?;
    match report.touched_slope() {
        Some(s) => eprintln!("max_touched vs log2(N) slope: {s:.4}"),
        None => eprintln!("max_touched vs log2(N) slope: n/a (needs two distinct sizes)"),
    }
    let violations = report.violations();
    if !violations.is_empty() {
        bail!("complexity bound violated: {}", violations.join("; "));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { input, grid, output } => cmd_fit(&input, &grid, &output),
        Command::Stream {
            mode,
            grid,
            input,
            output,
            snapshot_every,
        } => cmd_stream(mode, &grid, &input, &output, snapshot_every),
        Command::Apply { map, input, output } => cmd_apply(&map, &input, &output),
        Command::Bench {
            sizes,
            grid,
            seed,
            output,
        } => cmd_bench(&sizes, &grid, seed, &output),
    }
}
