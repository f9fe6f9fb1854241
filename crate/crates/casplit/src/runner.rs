//! The `run` command: traces, summary and metadata for a list of seeds.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use casplit_core::clock::step_order;
use casplit_core::metrics::{utilization_ratio, EtaReport};
use casplit_core::{RunMode, ScenarioConfig, SimError, Slot};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{eta_window, execute, scenario_label, RunResult};
use crate::config::{scenario_to_toml, ConfigError};
use crate::trace::{trace_header, write_trace};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(SimError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    /// 1 for anything the user can fix in the inputs, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        AppError::Csv {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig { .. } => AppError::Config(e.into()),
            other => AppError::Sim(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub modes: Vec<RunMode>,
    pub out: PathBuf,
}

/// One line of `summary.csv`. `record` is `run` for a single run and `eta` for
/// a utilization-ratio row built from the three modes of one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub record: &'static str,
    pub policy: String,
    pub mode: &'static str,
    pub seed: u64,
    pub slots: Option<u64>,
    pub total_delivered: Option<u64>,
    pub completed: Option<bool>,
    pub mean_throughput: Option<f64>,
    pub mean_abs_b: Option<f64>,
    pub eta: Option<f64>,
    pub ca_sum: Option<u64>,
    pub pcc_sum: Option<u64>,
    pub scc_sum: Option<u64>,
    pub window: Option<u64>,
}

impl SummaryRow {
    fn run(policy: &str, r: &RunResult, completed: bool) -> Self {
        let s = &r.summary;
        Self {
            record: "run",
            policy: policy.to_string(),
            mode: s.mode.label(),
            seed: s.seed,
            slots: Some(s.slots),
            total_delivered: Some(s.total_delivered),
            completed: Some(completed),
            mean_throughput: Some(s.mean_throughput),
            mean_abs_b: s.mean_abs_b,
            eta: None,
            ca_sum: None,
            pcc_sum: None,
            scc_sum: None,
            window: None,
        }
    }

    fn eta(policy: &str, e: &EtaReport) -> Self {
        Self {
            record: "eta",
            policy: policy.to_string(),
            mode: "ca",
            seed: e.seed,
            slots: None,
            total_delivered: None,
            completed: None,
            mean_throughput: None,
            mean_abs_b: None,
            eta: e.eta,
            ca_sum: Some(e.ca_sum),
            pcc_sum: Some(e.pcc_sum),
            scc_sum: Some(e.scc_sum),
            window: Some(e.window),
        }
    }
}

/// Wall-clock and memory per run. Kept out of `summary.csv` so that the
/// summary stays byte-identical across repeated runs.
#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub mode: &'static str,
    pub seed: u64,
    pub slots: u64,
    pub wall_ms: f64,
    pub peak_rss_kb: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    seeds: &'a [u64],
    modes: Vec<&'static str>,
    window_convention: &'static str,
    phase_order: Vec<&'static str>,
    trace_columns: Vec<String>,
    config_toml: String,
    config: &'a ScenarioConfig,
}

const WINDOW_CONVENTION: &str = "eta sums UE deliveries over slots [0, W) where W is the CA run length: \
the burst completion slot for burst workloads, max_slots otherwise. When CA is among the modes, the \
standalone runs are stopped at W; otherwise they run for max_slots. Standalone runs always use a saturated source.";

pub fn trace_file_name(mode: RunMode, seed: u64) -> String {
    format!("trace_{}_seed{seed}.csv", mode.label())
}

struct SeedOutput {
    rows: Vec<SummaryRow>,
    timings: Vec<TimingRow>,
}

fn run_one_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput, AppError> {
    let mut cfg = spec.scenario.clone();
    cfg.seed = seed;
    let policy = cfg.policy.label();
    let n_carriers = cfg.carriers.len();
    let mut results: Vec<(RunMode, RunResult)> = Vec::new();
    let mut window: Option<Slot> = None;
    let mut ordered = spec.modes.clone();
    ordered.sort();
    for mode in ordered {
        let cap = if mode == RunMode::Ca { None } else { window };
        let r = execute(&cfg, mode, cap, true)?;
        if mode == RunMode::Ca {
            window = Some(eta_window(&r.summary));
        }
        let path = spec.out.join(trace_file_name(mode, seed));
        let file = File::create(&path).map_err(|e| AppError::io(&path, e))?;
        write_trace(BufWriter::new(file), n_carriers, &r.trace).map_err(|e| AppError::csv(&path, e))?;
        results.push((mode, r));
    }

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (mode, r) in &results {
        let completed = *mode == RunMode::Ca
            && matches!(cfg.arrival, casplit_core::ArrivalMode::Burst)
            && r.summary.total_delivered >= cfg.packets;
        rows.push(SummaryRow::run(
            if *mode == RunMode::Ca { policy } else { "fixed" },
            r,
            completed,
        ));
        timings.push(TimingRow {
            mode: mode.label(),
            seed,
            slots: r.summary.slots,
            wall_ms: r.wall.as_secs_f64() * 1e3,
            peak_rss_kb: r.peak_rss_kb,
        });
    }
    let get = |m: RunMode| results.iter().find(|(mode, _)| *mode == m).map(|(_, r)| &r.summary);
    if let (Some(ca), Some(p), Some(s), Some(w)) =
        (get(RunMode::Ca), get(RunMode::PccOnly), get(RunMode::SccOnly), window)
    {
        let e = utilization_ratio(ca, p, s, w, &scenario_label(&cfg));
        rows.push(SummaryRow::eta(policy, &e));
    }
    Ok(SeedOutput { rows, timings })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), AppError> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r).map_err(|e| AppError::csv(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))?;
    Ok(())
}

/// Summary of a finished `run`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<SummaryRow>,
    pub trace_files: usize,
}

/// Executes every (seed, mode) pair and writes traces, `summary.csv`,
/// `timings.csv` and `metadata.json` into `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport, AppError> {
    if spec.seeds.is_empty() {
        return Err(AppError::Usage("at least one seed is required".into()));
    }
    if spec.modes.is_empty() {
        return Err(AppError::Usage("at least one mode is required".into()));
    }
    spec.scenario.validate()?;
    fs::create_dir_all(&spec.out).map_err(|e| AppError::io(&spec.out, e))?;

    let outputs: Vec<SeedOutput> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            log::info!("seed {seed}: running {} mode(s)", spec.modes.len());
            run_one_seed(spec, seed)
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<SummaryRow> = outputs.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    let timings: Vec<TimingRow> = outputs.iter().flat_map(|o| o.timings.iter().cloned()).collect();
    write_csv(&spec.out.join("summary.csv"), &rows)?;
    write_csv(&spec.out.join("timings.csv"), &timings)?;

    let mut modes = spec.modes.clone();
    modes.sort();
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seeds: &spec.seeds,
        modes: modes.iter().map(|m| m.label()).collect(),
        window_convention: WINDOW_CONVENTION,
        phase_order: step_order().iter().map(|p| p.label()).collect(),
        trace_columns: trace_header(spec.scenario.carriers.len()),
        config_toml: scenario_to_toml(&spec.scenario),
        config: &spec.scenario,
    };
    let path = spec.out.join("metadata.json");
    let text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    fs::write(&path, text + "\n").map_err(|e| AppError::io(&path, e))?;
    Ok(RunReport {
        trace_files: spec.seeds.len() * spec.modes.len(),
        rows,
    })
}

pub fn parse_modes(s: &str) -> Result<Vec<RunMode>, AppError> {
    let mut modes = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m = match part {
            "ca" => RunMode::Ca,
            "pcc" => RunMode::PccOnly,
            "scc" => RunMode::SccOnly,
            "all" => {
                modes.extend(RunMode::ALL);
                continue;
            }
            other => {
                return Err(AppError::Usage(format!(
                    "unknown mode `{other}` (expected ca, pcc, scc or all)"
                )))
            }
        };
        modes.push(m);
    }
    modes.sort();
    modes.dedup();
    Ok(modes)
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, AppError> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let parse = |x: &str| {
                x.parse::<u64>()
                    .map_err(|_| AppError::Usage(format!("bad seed range `{part}`")))
            };
            seeds.extend(parse(a)?..parse(b)?);
        } else {
            seeds.push(
                part.parse()
                    .map_err(|_| AppError::Usage(format!("bad seed `{part}`")))?,
            );
        }
    }
    Ok(seeds)
}
