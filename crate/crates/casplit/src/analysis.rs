//! Multi-run measurements: η per seed, convergence of the split ratio, and the
//! stationary-strategy sweep.

use std::time::{Duration, Instant};

use casplit_core::metrics::{
    buffer_throughput_correlation, settling_index, split_ratio_series, tail_ratio, utilization_ratio, EtaReport,
    RunSummary, StrategyPoint,
};
use casplit_core::splitter::Stationary;
use casplit_core::{
    build_run, build_with_splitter, ArrivalMode, RunMode, ScenarioConfig, SimError, Slot, SlotRecord, SplitAction,
};

/// One finished run with its trace and resource usage.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub trace: Vec<SlotRecord>,
    pub wall: Duration,
    /// Process peak resident set in kB after the run, where the OS reports it.
    pub peak_rss_kb: Option<u64>,
}

/// Peak resident set size of this process (Linux `VmHWM`).
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Runs `cfg` in `mode`, optionally capping the slot budget.
pub fn execute(
    cfg: &ScenarioConfig,
    mode: RunMode,
    max_slots: Option<Slot>,
    trace: bool,
) -> Result<RunResult, SimError> {
    let mut cfg = cfg.clone();
    if let Some(m) = max_slots {
        cfg.max_slots = m;
    }
    let start = Instant::now();
    let mut sim = build_run(&cfg, mode)?.with_trace(true);
    let outcome = sim.run()?;
    let records = sim.take_trace();
    let wall = start.elapsed();
    let summary = RunSummary::new(mode, cfg.seed, &outcome, &records);
    Ok(RunResult {
        summary,
        trace: if trace { records } else { Vec::new() },
        wall,
        peak_rss_kb: peak_rss_kb(),
    })
}

/// Label written into η reports.
pub fn scenario_label(cfg: &ScenarioConfig) -> String {
    let kind = match cfg.arrival {
        ArrivalMode::Burst => "burst",
        ArrivalMode::PerSlot { .. } => "per_slot",
        ArrivalMode::Saturated => "saturated",
    };
    format!("{}_{}_nscc{}", cfg.policy.label(), kind, cfg.n_scc())
}

/// The common η window: the CA run's length. A burst run stops when the UE
/// holds all L packets, so this is the completion time; saturated runs use the
/// full slot budget.
pub fn eta_window(ca: &RunSummary) -> Slot {
    ca.slots
}

/// CA, PCC-only and SCC-only results for one seed.
#[derive(Debug, Clone)]
pub struct SeedRuns {
    pub ca: RunResult,
    pub pcc: RunResult,
    pub scc: RunResult,
    pub eta: EtaReport,
}

/// Runs CA first, then both standalone modes over the CA window.
pub fn eta_for_seed(cfg: &ScenarioConfig, trace: bool) -> Result<SeedRuns, SimError> {
    let ca = execute(cfg, RunMode::Ca, None, trace)?;
    let window = eta_window(&ca.summary);
    let pcc = execute(cfg, RunMode::PccOnly, Some(window), trace)?;
    let scc = execute(cfg, RunMode::SccOnly, Some(window), trace)?;
    let eta = utilization_ratio(&ca.summary, &pcc.summary, &scc.summary, window, &scenario_label(cfg));
    Ok(SeedRuns { ca, pcc, scc, eta })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Settling of the split ratio after Stage 1.
#[derive(Debug, Clone)]
pub struct Convergence {
    pub n_scc: usize,
    pub policy: &'static str,
    /// First slot after Stage 1 (t = N + 1).
    pub stage1_end: usize,
    pub window: usize,
    /// Ratio over the second half of the run.
    pub steady: Option<f64>,
    /// Slots from the end of Stage 1 until the windowed ratio stays within the band.
    pub settle_after: Option<usize>,
    /// Windowed ratio per slot (None before Stage 1 ends or without PCC slots).
    pub series: Vec<Option<f64>>,
}

/// Trailing-window ΣA_s/ΣA_P over a long flat run, and the slot from which it
/// stays within `tol` of its steady value.
pub fn convergence(cfg: &ScenarioConfig, window: usize, tol: f64) -> Result<Convergence, SimError> {
    let mut sim = build_run(cfg, RunMode::Ca)?.with_trace(true);
    let outcome = sim.run()?;
    let actions: Vec<SplitAction> = sim
        .trace()
        .iter()
        .map(|r| SplitAction { a_p: r.a_p, a_s: r.a_s })
        .collect();
    let n = cfg.n_scc();
    let stage1_end = cfg.controller.horizon as usize + 1;
    let series = split_ratio_series(&actions, n, stage1_end, window);
    let steady = tail_ratio(&actions, n, actions.len() / 2);
    let settle_after = steady
        .and_then(|s| settling_index(&series, s, tol))
        .map(|i| i.saturating_sub(stage1_end));
    Ok(Convergence {
        n_scc: n,
        policy: outcome.policy,
        stage1_end,
        window,
        steady,
        settle_after,
        series,
    })
}

/// Stationary strategies (PCC slots, SCC slots) used for the |B| sweep.
pub const SWEEP: [(u32, u32); 8] = [(1, 4), (1, 3), (1, 2), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1)];

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub pcc_slots: u32,
    pub scc_slots: u32,
    pub point: StrategyPoint,
}

/// Runs every strategy in `patterns` as a burst transfer on `cfg`.
pub fn stationary_sweep(cfg: &ScenarioConfig, patterns: &[(u32, u32)]) -> Result<Vec<SweepRow>, SimError> {
    patterns
        .iter()
        .map(|&(p, s)| {
            let strategy = Stationary::new(p, s);
            let k = (s * cfg.n_scc() as u32) / p.max(1);
            let mut sim = build_with_splitter(cfg, Box::new(strategy))?.with_trace(true);
            let outcome = sim.run()?;
            let summary = RunSummary::new(RunMode::Ca, cfg.seed, &outcome, sim.trace());
            Ok(SweepRow {
                pcc_slots: p,
                scc_slots: s,
                point: StrategyPoint {
                    k,
                    mean_abs_b: summary.mean_abs_b.unwrap_or(0.0),
                    mean_throughput: summary.mean_throughput,
                },
            })
        })
        .collect()
}

pub fn sweep_correlation(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<StrategyPoint> = rows.iter().map(|r| r.point).collect();
    buffer_throughput_correlation(&pts)
}

/// Flat-channel burst scenario used by the convergence and sweep experiments.
pub fn flat_burst(n_scc: usize, packets: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::flat(n_scc);
    cfg.packets = packets;
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_window_follows_ca_length() {
        let mut cfg = ScenarioConfig::static_default(1);
        cfg.packets = 300;
        let r = eta_for_seed(&cfg, false).unwrap();
        assert!(r.ca.summary.per_slot.iter().map(|&d| u64::from(d)).sum::<u64>() == 300);
        assert_eq!(r.eta.window, r.ca.summary.slots);
        assert_eq!(r.pcc.summary.slots, r.ca.summary.slots);
        let eta = r.eta.eta.unwrap();
        assert!(eta > 0.0 && eta <= 1.0);
    }

    #[test]
    fn mean_and_spread() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[2.0, 4.0]), 2f64.sqrt());
        assert!(mean(&[]).is_nan());
    }
}
