//! Named experiment presets that emit one tidy table per figure.

use std::fs;
use std::path::{Path, PathBuf};

use casplit_core::{PolicyKind, ScenarioConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    convergence, eta_for_seed, flat_burst, mean, stationary_sweep, std_dev, sweep_correlation, SeedRuns, SWEEP,
};
use crate::runner::{write_csv, AppError};

pub const SUITES: [&str; 4] = ["fig4", "fig5", "fig6", "fig7"];
pub const SEEDS: u64 = 10;

#[derive(Debug, Serialize)]
struct SeriesRow {
    n_scc: usize,
    policy: &'static str,
    t: usize,
    ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SettleRow {
    n_scc: usize,
    policy: &'static str,
    window: usize,
    steady: Option<f64>,
    settle_after_stage1: Option<usize>,
    bound: u32,
}

#[derive(Debug, Serialize)]
struct SweepOut {
    n_scc: usize,
    pcc_slots: u32,
    scc_slots: u32,
    k: u32,
    mean_throughput: f64,
    mean_abs_b: f64,
}

#[derive(Debug, Serialize)]
struct CorrRow {
    n_scc: usize,
    pearson: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaRow {
    pub policy: &'static str,
    pub n_scc: usize,
    pub seed: u64,
    pub eta: Option<f64>,
    pub ca_sum: u64,
    pub pcc_sum: u64,
    pub scc_sum: u64,
    pub window: u64,
}

#[derive(Debug, Serialize)]
struct EtaMean {
    policy: &'static str,
    n_scc: usize,
    seeds: usize,
    mean_eta: f64,
    std_eta: f64,
}

#[derive(Debug, Serialize)]
struct TimeRow {
    policy: &'static str,
    second: u64,
    throughput: f64,
    eta: Option<f64>,
}

/// Long flat-channel run used for the convergence figure.
pub fn convergence_scenario(n_scc: usize, policy: PolicyKind) -> ScenarioConfig {
    let mut cfg = flat_burst(n_scc, 1_000_000);
    cfg.policy = policy;
    cfg.max_slots = 4_000;
    cfg
}

fn fig4(out: &Path) -> Result<Vec<PathBuf>, AppError> {
    let jobs: Vec<(usize, PolicyKind)> = [2usize, 3]
        .into_iter()
        .flat_map(|n| [PolicyKind::FuzzyPid, PolicyKind::NofuzzyPid].map(|p| (n, p)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(n, p)| {
            let cfg = convergence_scenario(n, p);
            convergence(&cfg, cfg.controller.horizon as usize, 0.1).map(|c| (cfg, c))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut series = Vec::new();
    let mut settle = Vec::new();
    for (cfg, c) in &results {
        series.extend(c.series.iter().enumerate().map(|(t, &ratio)| SeriesRow {
            n_scc: c.n_scc,
            policy: c.policy,
            t,
            ratio,
        }));
        settle.push(SettleRow {
            n_scc: c.n_scc,
            policy: c.policy,
            window: c.window,
            steady: c.steady,
            settle_after_stage1: c.settle_after,
            bound: 2 * cfg.controller.horizon,
        });
    }
    let files = [out.join("fig4_series.csv"), out.join("fig4_settle.csv")];
    write_csv(&files[0], &series)?;
    write_csv(&files[1], &settle)?;
    Ok(files.to_vec())
}

fn fig5(out: &Path) -> Result<Vec<PathBuf>, AppError> {
    let per_n = (1usize..=3)
        .into_par_iter()
        .map(|n| stationary_sweep(&flat_burst(n, 10_000), &SWEEP).map(|rows| (n, rows)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut corr = Vec::new();
    for (n, sweep) in &per_n {
        rows.extend(sweep.iter().map(|r| SweepOut {
            n_scc: *n,
            pcc_slots: r.pcc_slots,
            scc_slots: r.scc_slots,
            k: r.point.k,
            mean_throughput: r.point.mean_throughput,
            mean_abs_b: r.point.mean_abs_b,
        }));
        corr.push(CorrRow {
            n_scc: *n,
            pearson: sweep_correlation(sweep),
        });
    }
    let files = [out.join("fig5.csv"), out.join("fig5_corr.csv")];
    write_csv(&files[0], &rows)?;
    write_csv(&files[1], &corr)?;
    Ok(files.to_vec())
}

/// η for every (policy, N_SCC, seed) on the given scenario family.
pub fn eta_table(
    base: fn(usize) -> ScenarioConfig,
    n_sccs: &[usize],
    seeds: u64,
) -> Result<Vec<(EtaRow, SeedRuns)>, AppError> {
    let jobs: Vec<(PolicyKind, usize, u64)> = PolicyKind::ALL
        .into_iter()
        .flat_map(|p| n_sccs.iter().flat_map(move |&n| (0..seeds).map(move |s| (p, n, s))))
        .collect();
    jobs.par_iter()
        .map(|&(policy, n, seed)| {
            let mut cfg = base(n);
            cfg.policy = policy;
            cfg.seed = seed;
            let runs = eta_for_seed(&cfg, false)?;
            let e = &runs.eta;
            let row = EtaRow {
                policy: policy.label(),
                n_scc: n,
                seed,
                eta: e.eta,
                ca_sum: e.ca_sum,
                pcc_sum: e.pcc_sum,
                scc_sum: e.scc_sum,
                window: e.window,
            };
            Ok((row, runs))
        })
        .collect()
}

fn eta_means(rows: &[EtaRow]) -> Vec<EtaMean> {
    let mut keys: Vec<(&'static str, usize)> = rows.iter().map(|r| (r.policy, r.n_scc)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(policy, n)| {
            let etas: Vec<f64> = rows
                .iter()
                .filter(|r| r.policy == policy && r.n_scc == n)
                .filter_map(|r| r.eta)
                .collect();
            EtaMean {
                policy,
                n_scc: n,
                seeds: etas.len(),
                mean_eta: mean(&etas),
                std_eta: std_dev(&etas),
            }
        })
        .collect()
}

fn fig6(out: &Path) -> Result<Vec<PathBuf>, AppError> {
    let table = eta_table(ScenarioConfig::static_default, &[1, 2, 3], SEEDS)?;
    let rows: Vec<EtaRow> = table.into_iter().map(|(r, _)| r).collect();
    let files = [out.join("fig6.csv"), out.join("fig6_mean.csv")];
    write_csv(&files[0], &rows)?;
    write_csv(&files[1], &eta_means(&rows))?;
    Ok(files.to_vec())
}

/// Per-second CA throughput and η along the mobile run of seed 0.
fn time_series(policy: &'static str, runs: &SeedRuns, slots_per_second: usize) -> Vec<TimeRow> {
    let ca = &runs.ca.summary.per_slot;
    let p = &runs.pcc.summary.per_slot;
    let s = &runs.scc.summary.per_slot;
    let sum = |v: &[u32], a: usize, b: usize| {
        v.get(a..b.min(v.len()))
            .map_or(0, |x| x.iter().map(|&d| u64::from(d)).sum::<u64>())
    };
    (0..ca.len().div_ceil(slots_per_second))
        .map(|i| {
            let (a, b) = (i * slots_per_second, (i + 1) * slots_per_second);
            let c = sum(ca, a, b);
            let denom = sum(p, a, b) + sum(s, a, b);
            TimeRow {
                policy,
                second: i as u64,
                throughput: c as f64 / (b.min(ca.len()) - a) as f64,
                eta: (denom > 0).then(|| c as f64 / denom as f64),
            }
        })
        .collect()
}

fn fig7(out: &Path) -> Result<Vec<PathBuf>, AppError> {
    let table = eta_table(ScenarioConfig::mobile_default, &[3], SEEDS)?;
    let slots_per_second = (1.0 / ScenarioConfig::mobile_default(3).slot_duration_s).round() as usize;
    let mut series = Vec::new();
    for (row, runs) in &table {
        if row.seed == 0 {
            series.extend(time_series(row.policy, runs, slots_per_second.max(1)));
        }
    }
    let rows: Vec<EtaRow> = table.into_iter().map(|(r, _)| r).collect();
    let files = [
        out.join("fig7.csv"),
        out.join("fig7_mean.csv"),
        out.join("fig7_series.csv"),
    ];
    write_csv(&files[0], &rows)?;
    write_csv(&files[1], &eta_means(&rows))?;
    write_csv(&files[2], &series)?;
    Ok(files.to_vec())
}

/// Runs a preset and returns the files it wrote.
pub fn run_suite(name: &str, out: &Path) -> Result<Vec<PathBuf>, AppError> {
    let f = match name {
        "fig4" => fig4,
        "fig5" => fig5,
        "fig6" => fig6,
        "fig7" => fig7,
        other => {
            return Err(AppError::Usage(format!(
                "unknown suite `{other}` (expected one of {})",
                SUITES.join(", ")
            )))
        }
    };
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;
    f(out)
}
