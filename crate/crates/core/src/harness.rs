//! Monte-Carlo sweeps, summary statistics, CSV output and SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PolygonFile};
use crate::polygen::{count_spikes, inflate_cut, CombSpec, PolygenError};
use crate::sim::{run_trial, Arena, IntruderModel, SfcLayout, SfcParams, SimConfig, SimError, Strategy, TrialResult};

/// Environment variable that fixes the sweep's worker count.
pub const WORKERS_ENV: &str = "ORTHOSEARCH_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no trial results to summarize")]
    EmptyInput,
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("unknown preset '{0}' (spikes4, shapes, areas, beta)")]
    UnknownPreset(String),
    #[error("instance '{id}': {source}")]
    Instance { id: String, source: Box<HarnessError> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Polygen(#[from] PolygenError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// Path to a polygon JSON file.
    File(PathBuf),
    Polygon(PolygonFile),
    Comb(CombSpec),
    InflateCut { vertices: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub id: String,
    #[serde(flatten)]
    pub source: InstanceSource,
    /// Spike count label; counted from the polygon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<u32>,
}

impl InstanceSpec {
    pub fn comb(id: impl Into<String>, spec: CombSpec) -> Self {
        let beta = Some(spec.spike_lengths.len() as u32);
        Self { id: id.into(), source: InstanceSource::Comb(spec), beta }
    }

    pub fn load(&self) -> Result<Arena> {
        let wrap = |e: HarnessError| HarnessError::Instance { id: self.id.clone(), source: Box::new(e) };
        let (poly, cell_size) = match &self.source {
            InstanceSource::File(path) => {
                let file = PolygonFile::load(path).map_err(|e| wrap(e.into()))?;
                (file.to_polygon().map_err(|e| wrap(e.into()))?, file.cell_size_m)
            }
            InstanceSource::Polygon(file) => (file.to_polygon().map_err(|e| wrap(e.into()))?, file.cell_size_m),
            InstanceSource::Comb(spec) => (spec.polygon().map_err(|e| wrap(e.into()))?, 5.0),
            InstanceSource::InflateCut { vertices, seed } => {
                (inflate_cut(*vertices, *seed).map_err(|e| wrap(e.into()))?, 5.0)
            }
        };
        let beta = self.beta.unwrap_or_else(|| count_spikes(&poly) as u32);
        let mut arena = Arena::new(self.id.clone(), poly).map_err(|e| wrap(e.into()))?.with_beta(beta);
        arena.cell_size_m = cell_size;
        Ok(arena)
    }
}

fn default_trials() -> usize {
    100
}

fn default_rect_attempts() -> u32 {
    16
}

/// A full-factorial experiment: every instance × strategy × intruder × k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub instances: Vec<InstanceSpec>,
    pub strategies: Vec<Strategy>,
    pub k_values: Vec<usize>,
    pub intruders: Vec<IntruderModel>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Defaults to 100 × the instance's cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub rect_seed: u64,
    #[serde(default = "default_rect_attempts")]
    pub rect_attempts: u32,
}

impl SweepSpec {
    /// Reads a spec; relative polygon paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec: SweepSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for inst in &mut spec.instances {
            if let InstanceSource::File(p) = &mut inst.source {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.instances.is_empty() || self.strategies.is_empty() || self.k_values.is_empty() || self.intruders.is_empty() {
            return bad("instances, strategies, k_values and intruders must be non-empty");
        }
        if self.k_values.contains(&0) {
            return bad("k values must be positive");
        }
        if self.rect_attempts == 0 {
            return bad("rect_attempts must be positive");
        }
        Ok(())
    }

    /// Number of (instance, strategy, intruder, k) cells.
    pub fn cell_count(&self) -> usize {
        self.instances.len() * self.strategies.len() * self.intruders.len() * self.k_values.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub strategy: Strategy,
    pub intruder: IntruderModel,
    pub k: usize,
    pub trials: usize,
    pub capture_rate: f64,
    /// Over captured trials only.
    pub mean_steps: Option<f64>,
    pub sd: Option<f64>,
    pub ci95: Option<f64>,
    pub feasible: bool,
}

impl SummaryRow {
    fn infeasible(instance: &str, strategy: Strategy, intruder: IntruderModel, k: usize) -> Self {
        Self {
            instance: instance.to_string(),
            strategy,
            intruder,
            k,
            trials: 0,
            capture_rate: 0.0,
            mean_steps: None,
            sd: None,
            ci95: None,
            feasible: false,
        }
    }

    /// Whether two rows' 95% intervals intersect.
    pub fn ci_overlaps(&self, other: &SummaryRow) -> bool {
        match (self.mean_steps, self.ci95, other.mean_steps, other.ci95) {
            (Some(m1), Some(c1), Some(m2), Some(c2)) => (m1 - m2).abs() <= c1 + c2,
            _ => false,
        }
    }
}

/// Mean, unbiased standard deviation and normal 95% half-width over the
/// captured trials, plus the capture rate over all of them.
pub fn summarize(results: &[TrialResult]) -> Result<SummaryRow> {
    let first = results.first().ok_or(HarnessError::EmptyInput)?;
    let steps: Vec<f64> = results.iter().filter(|r| r.captured).map(|r| r.steps as f64).collect();
    let n = steps.len();
    let (mean, sd, ci) = if n == 0 {
        (None, None, None)
    } else {
        let mean = steps.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        (Some(mean), Some(sd), Some(1.96 * sd / (n as f64).sqrt()))
    };
    Ok(SummaryRow {
        instance: first.instance.clone(),
        strategy: first.strategy,
        intruder: first.intruder,
        k: first.k,
        trials: results.len(),
        capture_rate: n as f64 / results.len() as f64,
        mean_steps: mean,
        sd,
        ci95: ci,
        feasible: true,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, mixed from the base seed, cell index and trial index.
pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ cell as u64) ^ trial as u64)
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs the sweep on the worker count from the environment (or all cores).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SummaryRow>> {
    run_sweep_with_workers(spec, workers_from_env())
}

struct Job {
    cell: usize,
    cfg: SimConfig,
}

/// Runs the sweep on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<SummaryRow>> {
    spec.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;

    let arenas = pool.install(|| {
        spec.instances.par_iter().map(|inst| inst.load().map(Arc::new)).collect::<Result<Vec<_>>>()
    })?;
    let wants_layout = spec.strategies.iter().any(|s| matches!(s, Strategy::Sfc | Strategy::SfcGuarded));
    let layouts: Vec<Option<Arc<SfcLayout>>> = pool.install(|| {
        arenas
            .par_iter()
            .map(|a| wants_layout.then(|| Arc::new(SfcLayout::new(&a.grid, spec.rect_seed, spec.rect_attempts))))
            .collect()
    });

    let mut rows: Vec<Option<SummaryRow>> = Vec::with_capacity(spec.cell_count());
    let mut jobs = Vec::new();
    let mut cell = 0;
    for (arena, layout) in arenas.iter().zip(&layouts) {
        for &strategy in &spec.strategies {
            for &intruder in &spec.intruders {
                for &k in &spec.k_values {
                    let feasible = match (strategy, layout) {
                        (Strategy::Sfc, Some(l)) => k >= l.rect_count() && k <= arena.cells(),
                        (Strategy::SfcGuarded, Some(l)) => {
                            k >= l.min_robots(strategy) && k - l.junction_count() <= arena.cells()
                        }
                        _ => true,
                    };
                    if !feasible {
                        rows.push(Some(SummaryRow::infeasible(&arena.id, strategy, intruder, k)));
                    } else {
                        rows.push(None);
                        for trial in 0..spec.trials {
                            let mut cfg = SimConfig::new(arena.clone(), strategy, k, intruder, trial_seed(spec.base_seed, cell, trial));
                            if let Some(m) = spec.max_steps {
                                cfg.max_steps = m;
                            }
                            cfg.sfc = SfcParams { rect_seed: spec.rect_seed, rect_attempts: spec.rect_attempts };
                            cfg.layout = layout.clone();
                            jobs.push(Job { cell, cfg });
                        }
                    }
                    cell += 1;
                }
            }
        }
    }
    log::info!("sweep: {} cells, {} trials", rows.len(), jobs.len());

    let results: Vec<(usize, TrialResult)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_trial(&job.cfg).map(|r| (job.cell, r)))
            .collect::<std::result::Result<Vec<_>, SimError>>()
    })?;

    let mut by_cell: BTreeMap<usize, Vec<TrialResult>> = BTreeMap::new();
    for (cell, r) in results {
        by_cell.entry(cell).or_default().push(r);
    }
    for (cell, trials) in by_cell {
        rows[cell] = Some(summarize(&trials)?);
    }
    Ok(rows.into_iter().map(|r| r.expect("every cell summarized")).collect())
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(String::new, |v| format!("{v:.digits$}"))
}

pub const CSV_HEADER: [&str; 10] =
    ["instance", "strategy", "intruder", "k", "trials", "capture_rate", "mean_steps", "sd", "ci95", "feasible"];

/// Writes rows as CSV with a fixed column order and fixed float precision.
pub fn write_csv<W: io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.strategy.to_string(),
            r.intruder.to_string(),
            r.k.to_string(),
            r.trials.to_string(),
            format!("{:.4}", r.capture_rate),
            fmt_opt(r.mean_steps, 3),
            fmt_opt(r.sd, 3),
            fmt_opt(r.ci95, 3),
            r.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// Mean steps against k, one line with a CI band per series.
    Line,
    /// Mean steps per instance, one bar per series.
    Bar,
}

impl std::str::FromStr for PlotKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "line" => Ok(PlotKind::Line),
            "bar" => Ok(PlotKind::Bar),
            _ => Err(format!("unknown plot kind '{s}' (line, bar)")),
        }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn series_label(r: &SummaryRow, many_intruders: bool, many_instances: bool) -> String {
    let mut s = r.strategy.to_string();
    if many_intruders {
        s = format!("{s} ({})", r.intruder);
    }
    if many_instances {
        s = format!("{s} [{}]", r.instance);
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders rows with a mean as a self-contained SVG document.
pub fn emit_svg(rows: &[SummaryRow], kind: PlotKind) -> Result<String> {
    let rows: Vec<&SummaryRow> = rows.iter().filter(|r| r.mean_steps.is_some()).collect();
    if rows.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let distinct = |f: fn(&SummaryRow) -> String| {
        let mut v: Vec<String> = rows.iter().map(|r| f(r)).collect();
        v.dedup();
        v.sort();
        v.dedup();
        v
    };
    let many_intruders = distinct(|r| r.intruder.to_string()).len() > 1;
    let instances: Vec<String> = {
        let mut seen = Vec::new();
        for r in &rows {
            if !seen.contains(&r.instance) {
                seen.push(r.instance.clone());
            }
        }
        seen
    };
    let many_instances = kind == PlotKind::Line && instances.len() > 1;
    let mut series: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for r in &rows {
        let label = series_label(r, many_intruders, many_instances);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(r),
            None => series.push((label, vec![r])),
        }
    }

    let y_max = rows
        .iter()
        .map(|r| r.mean_steps.unwrap() + r.ci95.unwrap_or(0.0))
        .fold(0.0_f64, f64::max)
        .max(1.0)
        * 1.05;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sy = |v: f64| TOP + plot_h * (1.0 - v / y_max);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    )
    .unwrap();
    writeln!(svg, r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, TOP + plot_h).unwrap();
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        writeln!(
            svg,
            r#"<text class="tick" x="{}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            LEFT - 6.0,
            sy(v) + 4.0,
            v
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text class="label" x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">mean steps to capture</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    match kind {
        PlotKind::Line => {
            let k_min = rows.iter().map(|r| r.k).min().unwrap() as f64;
            let k_max = rows.iter().map(|r| r.k).max().unwrap() as f64;
            let span = (k_max - k_min).max(1.0);
            let sx = |k: usize| LEFT + plot_w * (k as f64 - k_min) / span;
            for (i, (_, pts)) in series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let mut pts = pts.clone();
                pts.sort_by_key(|r| r.k);
                let upper: Vec<String> = pts
                    .iter()
                    .map(|r| format!("{:.1},{:.1}", sx(r.k), sy(r.mean_steps.unwrap() + r.ci95.unwrap_or(0.0))))
                    .collect();
                let lower: Vec<String> = pts
                    .iter()
                    .rev()
                    .map(|r| format!("{:.1},{:.1}", sx(r.k), sy((r.mean_steps.unwrap() - r.ci95.unwrap_or(0.0)).max(0.0))))
                    .collect();
                writeln!(
                    svg,
                    r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    upper.join(" "),
                    lower.join(" ")
                )
                .unwrap();
                let line: Vec<String> =
                    pts.iter().map(|r| format!("{:.1},{:.1}", sx(r.k), sy(r.mean_steps.unwrap()))).collect();
                writeln!(
                    svg,
                    r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    line.join(" ")
                )
                .unwrap();
            }
            let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
            ks.sort_unstable();
            ks.dedup();
            let stride = ks.len().div_ceil(12).max(1);
            for k in ks.iter().step_by(stride) {
                writeln!(
                    svg,
                    r#"<text class="tick" x="{:.1}" y="{}" text-anchor="middle">{k}</text>"#,
                    sx(*k),
                    TOP + plot_h + 16.0
                )
                .unwrap();
            }
            writeln!(
                svg,
                r#"<text class="label" x="{:.1}" y="{}" text-anchor="middle">number of robots k</text>"#,
                LEFT + plot_w / 2.0,
                HEIGHT - 10.0
            )
            .unwrap();
        }
        PlotKind::Bar => {
            let group_w = plot_w / instances.len() as f64;
            let bar_w = group_w * 0.8 / series.len() as f64;
            for (gi, inst) in instances.iter().enumerate() {
                let gx = LEFT + gi as f64 * group_w + group_w * 0.1;
                for (si, (_, pts)) in series.iter().enumerate() {
                    let Some(r) = pts.iter().find(|r| &r.instance == inst) else { continue };
                    let color = PALETTE[si % PALETTE.len()];
                    let m = r.mean_steps.unwrap();
                    let x = gx + si as f64 * bar_w;
                    writeln!(
                        svg,
                        r#"<rect class="bar" x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}"/>"#,
                        sy(m),
                        bar_w * 0.9,
                        sy(0.0) - sy(m)
                    )
                    .unwrap();
                    if let Some(c) = r.ci95 {
                        let cx = x + bar_w * 0.45;
                        writeln!(
                            svg,
                            r#"<line class="error" x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                            sy(m + c),
                            sy((m - c).max(0.0))
                        )
                        .unwrap();
                    }
                }
                writeln!(
                    svg,
                    r#"<text class="tick" x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                    gx + group_w * 0.4,
                    TOP + plot_h + 16.0,
                    escape(inst)
                )
                .unwrap();
            }
        }
    }

    for (i, (label, _)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 16.0;
        writeln!(svg, r#"<rect class="legend" x="{x}" y="{:.1}" width="12" height="12" fill="{color}"/>"#, y - 10.0).unwrap();
        writeln!(svg, r#"<text class="legend" x="{}" y="{y:.1}">{}</text>"#, x + 18.0, escape(label)).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            out[t] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub const PRESETS: [&str; 4] = ["spikes4", "shapes", "areas", "beta"];

fn comb(base_height: u32, width: u32, gap: u32, depths: &[u32]) -> CombSpec {
    CombSpec { base_height, spike_lengths: depths.to_vec(), spike_width: width, spike_gap: gap }
}

/// Three five-spike combs of 176 cells each.
pub fn shape_combs() -> [CombSpec; 3] {
    [
        comb(4, 2, 2, &[8, 10, 8, 10, 8]),
        comb(4, 2, 2, &[12, 6, 8, 6, 12]),
        comb(2, 2, 3, &[10, 14, 12, 14, 10]),
    ]
}

/// Combs with 2..=6 spikes and 160 cells each.
pub fn beta_combs() -> Vec<CombSpec> {
    (2u32..=6)
        .map(|beta| {
            let total = 76 - 8 * beta;
            let base = total / beta;
            let extra = (total % beta) as usize;
            let depths: Vec<u32> = (0..beta as usize).map(|i| base + u32::from(i < extra)).collect();
            comb(4, 2, 2, &depths)
        })
        .collect()
}

/// Built-in sweeps modeled on the standard experiment set.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let all = Strategy::ALL.to_vec();
    let both = vec![IntruderModel::Static, IntruderModel::RandomWalk];
    let spec = |instances, k_values| SweepSpec {
        instances,
        strategies: all.clone(),
        k_values,
        intruders: both.clone(),
        trials: 100,
        base_seed: 2024,
        max_steps: None,
        rect_seed: 0,
        rect_attempts: 16,
    };
    match name {
        "spikes4" => Ok(spec(
            vec![InstanceSpec::comb("spikes4", comb(4, 2, 2, &[10, 8, 12, 10]))],
            (2..=60).step_by(3).collect(),
        )),
        "shapes" => Ok(spec(
            shape_combs().into_iter().enumerate().map(|(i, c)| InstanceSpec::comb(format!("P{i}"), c)).collect(),
            vec![13],
        )),
        "areas" => {
            let base = shape_combs()[0].clone();
            Ok(spec(
                (1..=3)
                    .map(|f| {
                        let c = base.scaled(f);
                        InstanceSpec::comb(format!("A{}", c.area()), c)
                    })
                    .collect(),
                vec![10],
            ))
        }
        "beta" => Ok(spec(
            beta_combs()
                .into_iter()
                .map(|c| InstanceSpec::comb(format!("beta{}", c.spike_lengths.len()), c))
                .collect(),
            vec![25],
        )),
        _ => Err(HarnessError::UnknownPreset(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(steps: u64, captured: bool) -> TrialResult {
        TrialResult {
            captured,
            steps,
            strategy: Strategy::Random,
            k: 3,
            seed: 0,
            intruder: IntruderModel::Static,
            instance: "x".into(),
            area_cells: 10,
            beta: None,
            trace: None,
        }
    }

    #[test]
    fn summary_examples() {
        let r = summarize(&[trial(10, true), trial(10, true), trial(10, true)]).unwrap();
        assert_eq!((r.mean_steps, r.sd, r.ci95), (Some(10.0), Some(0.0), Some(0.0)));
        let r = summarize(&[trial(8, true), trial(12, true)]).unwrap();
        assert_eq!(r.mean_steps, Some(10.0));
        assert!((r.sd.unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let mut ts: Vec<_> = (0..9).map(|i| trial(i + 1, true)).collect();
        ts.push(trial(1000, false));
        let r = summarize(&ts).unwrap();
        assert_eq!(r.capture_rate, 0.9);
        assert_eq!(r.mean_steps, Some(5.0));
        assert!(matches!(summarize(&[]), Err(HarnessError::EmptyInput)));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![summarize(&[trial(8, true), trial(12, true)]).unwrap()];
        let text = emit_csv(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "instance,strategy,intruder,k,trials,capture_rate,mean_steps,sd,ci95,feasible");
        assert_eq!(lines[1], "x,rs,static,3,2,1.0000,10.000,2.828,3.920,true");
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back[0].k, 3);
        assert_eq!(back[0].mean_steps, Some(10.0));
        let empty = vec![SummaryRow::infeasible("y", Strategy::Sfc, IntruderModel::RandomWalk, 2)];
        let text = emit_csv(&empty).unwrap();
        assert!(text.ends_with("y,sfc,random,2,0,0.0000,,,,false\n"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), empty);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]) - 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn preset_areas() {
        for c in shape_combs() {
            assert_eq!(c.area(), 176);
            assert_eq!(c.spike_lengths.len(), 5);
        }
        for c in beta_combs() {
            assert_eq!(c.area(), 160);
        }
        let spikes = preset("spikes4").unwrap();
        match &spikes.instances[0].source {
            InstanceSource::Comb(c) => assert_eq!(c.area(), 152),
            other => panic!("{other:?}"),
        }
        assert_eq!(spikes.k_values.len(), 20);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for cell in 0..200 {
            for t in 0..100 {
                assert!(seen.insert(trial_seed(7, cell, t)));
            }
        }
    }

    #[test]
    fn spec_json() {
        let json = r#"{
            "instances": [
                {"id": "a", "comb": {"base_height": 2, "spike_lengths": [3, 4], "spike_width": 1, "spike_gap": 1}},
                {"id": "b", "inflate_cut": {"vertices": 12, "seed": 3}},
                {"id": "c", "file": "poly.json"}
            ],
            "strategies": ["sfc", "rs"],
            "k_values": [3],
            "intruders": ["static"]
        }"#;
        let spec: SweepSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.instances[2].source, InstanceSource::File("poly.json".into()));
        assert!(matches!(spec.instances[1].source, InstanceSource::InflateCut { vertices: 12, seed: 3 }));
    }
}
