//! Utilization ratio η, run summaries, split-ratio series and the |B|/throughput correlation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::clock::Slot;
use crate::scenario::RunMode;
use crate::sim::{RunOutcome, SlotRecord};
use crate::splitter::SplitAction;

/// Per-run totals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    pub mode: RunMode,
    pub policy: String,
    pub seed: u64,
    pub total_delivered: u64,
    /// Slots executed.
    pub slots: Slot,
    pub mean_throughput: f64,
    /// Mean |B(t)| over the run; `None` when no trace was recorded.
    pub mean_abs_b: Option<f64>,
    /// UE deliveries per slot.
    pub per_slot: Vec<u32>,
}

impl RunSummary {
    pub fn new(mode: RunMode, seed: u64, outcome: &RunOutcome, trace: &[SlotRecord]) -> Self {
        let slots = outcome.slots;
        let mean_abs_b = if trace.is_empty() {
            None
        } else {
            Some(trace.iter().map(|r| r.b.unsigned_abs() as f64).sum::<f64>() / trace.len() as f64)
        };
        Self {
            mode,
            policy: String::from(outcome.policy),
            seed,
            total_delivered: outcome.delivered,
            slots,
            mean_throughput: if slots == 0 {
                0.0
            } else {
                outcome.delivered as f64 / slots as f64
            },
            mean_abs_b,
            per_slot: outcome.per_slot.clone(),
        }
    }

    /// Deliveries in slots `[0, window)`. Slots past the end of the run count as 0.
    pub fn delivered_within(&self, window: Slot) -> u64 {
        self.per_slot.iter().take(window as usize).map(|&d| u64::from(d)).sum()
    }
}

/// η for one seed, with the sums it was built from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EtaReport {
    /// `None` when both standalone runs delivered nothing.
    pub eta: Option<f64>,
    pub ca_sum: u64,
    pub pcc_sum: u64,
    pub scc_sum: u64,
    pub window: Slot,
    pub seed: u64,
    pub scenario: String,
}

/// η = ΣCA / (ΣPCC-only + ΣSCC-only) over slots `[0, window)`.
pub fn utilization_ratio(
    ca: &RunSummary,
    pcc_only: &RunSummary,
    scc_only: &RunSummary,
    window: Slot,
    scenario: &str,
) -> EtaReport {
    let ca_sum = ca.delivered_within(window);
    let pcc_sum = pcc_only.delivered_within(window);
    let scc_sum = scc_only.delivered_within(window);
    let denom = pcc_sum + scc_sum;
    EtaReport {
        eta: (denom > 0).then(|| ca_sum as f64 / denom as f64),
        ca_sum,
        pcc_sum,
        scc_sum,
        window,
        seed: ca.seed,
        scenario: String::from(scenario),
    }
}

/// Sample Pearson correlation. `None` for fewer than two points, mismatched
/// lengths, or a constant series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / crate::math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// One strategy of a stationary sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrategyPoint {
    pub k: u32,
    pub mean_abs_b: f64,
    pub mean_throughput: f64,
}

/// Pearson(mean |B|, mean throughput) across a strategy sweep; needs at least three points.
pub fn buffer_throughput_correlation(points: &[StrategyPoint]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let b: Vec<f64> = points.iter().map(|p| p.mean_abs_b).collect();
    let thr: Vec<f64> = points.iter().map(|p| p.mean_throughput).collect();
    pearson(&b, &thr)
}

/// Trailing-window split ratio Σ_s ΣA_s / ΣA_P, counting the SCC bit once per SCC.
///
/// Entry `i` covers actions `[max(start, i+1−window), i]`; entries before
/// `start` and windows without a PCC slot are `None`.
pub fn split_ratio_series(actions: &[SplitAction], n_scc: usize, start: usize, window: usize) -> Vec<Option<f64>> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(actions.len());
    let (mut pcc, mut scc) = (0u64, 0u64);
    for (i, a) in actions.iter().enumerate() {
        if i < start {
            out.push(None);
            continue;
        }
        pcc += u64::from(a.a_p);
        scc += u64::from(a.a_s) * n_scc as u64;
        if i >= start + window {
            let old = actions[i - window];
            pcc -= u64::from(old.a_p);
            scc -= u64::from(old.a_s) * n_scc as u64;
        }
        out.push((pcc > 0).then(|| scc as f64 / pcc as f64));
    }
    out
}

/// Ratio over `actions[from..]`, the reference "steady" value for convergence checks.
pub fn tail_ratio(actions: &[SplitAction], n_scc: usize, from: usize) -> Option<f64> {
    let tail = actions.get(from..)?;
    let pcc: u64 = tail.iter().map(|a| u64::from(a.a_p)).sum();
    let scc: u64 = tail.iter().map(|a| u64::from(a.a_s)).sum::<u64>() * n_scc as u64;
    (pcc > 0).then(|| scc as f64 / pcc as f64)
}

/// First index from which every entry of `series` lies within `target·(1 ± tol)`.
pub fn settling_index(series: &[Option<f64>], target: f64, tol: f64) -> Option<usize> {
    let inside = |v: &Option<f64>| v.is_some_and(|x| (x - target).abs() <= tol * target.abs());
    let mut first = None;
    for (i, v) in series.iter().enumerate() {
        if inside(v) {
            first.get_or_insert(i);
        } else {
            first = None;
        }
    }
    first
}
