use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use orthosearch::decomposition::rectangulate_best_of;
use orthosearch::geometry::PolygonFile;
use orthosearch::harness::{self, PlotKind, SweepSpec};
use orthosearch::polygen::{build_comb, count_spikes, inflate_cut, ThreePartitionInstance};
use orthosearch::sfc::{gilbert_curve, repair_curve};
use orthosearch::sim::{run_trial, Arena, IntruderModel, SfcParams, SimConfig, Strategy};
use orthosearch::GridGraph;

#[derive(Parser)]
#[command(name = "orthosearch", version, about = "Multi-robot intruder search in orthogonal polygons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random orthogonal polygon with the given vertex count.
    Generate {
        #[arg(long)]
        vertices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5.0)]
        cell_size: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Comb polygon built from a 3-Partition instance file.
    Comb {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        width: u32,
        #[arg(long, default_value_t = 1)]
        base_height: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rectangles and junctions of a polygon.
    Decompose {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seeds tried; the decomposition with the fewest rectangles wins.
        #[arg(long, default_value_t = 1)]
        attempts: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Visit order of the space-filling curve on a W x H rectangle.
    Curve {
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        /// Replace diagonal steps with unit steps.
        #[arg(long)]
        repair: bool,
    },
    /// One search trial; prints the result as JSON.
    Simulate {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "random")]
        intruder: IntruderModel,
        /// Defaults to 100 times the cell count.
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        rect_seed: u64,
        #[arg(long, default_value_t = 16)]
        rect_attempts: u32,
        /// Write one JSON object per step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Runs a sweep spec and writes summary CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Renders summary CSV as an SVG chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "line")]
        kind: PlotKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Runs (or prints) a built-in sweep: spikes4, shapes, areas or beta.
    Preset {
        name: String,
        /// Print the sweep spec instead of running it.
        #[arg(long)]
        spec_only: bool,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also render a chart of the results.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = sink(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_polygon(path: Option<&Path>, file: &PolygonFile) -> Result<()> {
    match path {
        Some(p) => Ok(file.save(p)?),
        None => write_text(None, &(serde_json::to_string(file)? + "\n")),
    }
}

fn load_arena(path: &Path) -> Result<Arena> {
    let file = PolygonFile::load(path).with_context(|| format!("reading {}", path.display()))?;
    let poly = file.to_polygon()?;
    let beta = count_spikes(&poly) as u32;
    let id = path.file_stem().map_or_else(|| "polygon".to_string(), |s| s.to_string_lossy().into_owned());
    let mut arena = Arena::new(id, poly)?.with_beta(beta);
    arena.cell_size_m = file.cell_size_m;
    Ok(arena)
}

fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<harness::SummaryRow>> {
    let workers = workers.or_else(harness::workers_from_env);
    Ok(harness::run_sweep_with_workers(spec, workers)?)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate { vertices, seed, cell_size, output } => {
            let poly = inflate_cut(vertices, seed)?;
            write_polygon(output.as_deref(), &PolygonFile::from_polygon(&poly, cell_size))
        }
        Command::Comb { spec, width, base_height, output } => {
            let inst = ThreePartitionInstance::load(&spec)?;
            let poly = build_comb(&inst, width, base_height)?;
            write_polygon(output.as_deref(), &PolygonFile::from_polygon(&poly, 5.0))
        }
        Command::Decompose { poly, seed, attempts, output } => {
            let arena = load_arena(&poly)?;
            let r = rectangulate_best_of(&arena.grid, seed, attempts.max(1));
            write_json(output.as_deref(), &r)
        }
        Command::Curve { width, height, repair } => {
            if width == 0 || height == 0 {
                bail!("width and height must be positive");
            }
            let mut c = gilbert_curve(width, height);
            if repair {
                c = repair_curve(&c, &GridGraph::block(width, height))?;
            }
            write_text(None, &(serde_json::to_string(&c)? + "\n"))
        }
        Command::Simulate { poly, strategy, k, intruder, max_steps, seed, rect_seed, rect_attempts, trace } => {
            let arena = Arc::new(load_arena(&poly)?);
            let mut cfg = SimConfig::new(arena, strategy, k, intruder, seed);
            if let Some(m) = max_steps {
                cfg.max_steps = m;
            }
            cfg.sfc = SfcParams { rect_seed, rect_attempts: rect_attempts.max(1) };
            cfg.record_trace = trace.is_some();
            let mut result = run_trial(&cfg)?;
            if let Some(path) = &trace {
                let mut out = sink(Some(path))?;
                for step in result.trace.take().unwrap_or_default() {
                    serde_json::to_writer(&mut out, &step)?;
                    out.write_all(b"\n")?;
                }
                out.flush()?;
            }
            write_json(None, &result)
        }
        Command::Sweep { spec, workers, output } => {
            let spec = SweepSpec::load(&spec)?;
            let rows = run_sweep(&spec, workers)?;
            harness::write_csv(&rows, sink(output.as_deref())?)?;
            Ok(())
        }
        Command::Plot { csv, kind, output } => {
            let rows = harness::read_csv(File::open(&csv).with_context(|| format!("reading {}", csv.display()))?)?;
            write_text(output.as_deref(), &harness::emit_svg(&rows, kind)?)
        }
        Command::Preset { name, spec_only, trials, workers, output, svg } => {
            let mut spec = harness::preset(&name)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if spec_only {
                return write_json(output.as_deref(), &spec);
            }
            let rows = run_sweep(&spec, workers)?;
            harness::write_csv(&rows, sink(output.as_deref())?)?;
            if let Some(path) = svg {
                let kind = if spec.k_values.len() > 1 { PlotKind::Line } else { PlotKind::Bar };
                write_text(Some(&path), &harness::emit_svg(&rows, kind)?)?;
            }
            Ok(())
        }
    }
}
