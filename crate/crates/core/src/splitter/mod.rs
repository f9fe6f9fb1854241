//! Traffic-splitting controllers and the interface the simulator drives them through.

use alloc::boxed::Box;

use crate::clock::Slot;

pub mod baselines;
pub mod fuzzy_pid;

pub use baselines::{Bwa, DelayEstimate, Ltr, QLearning, QLearningConfig, QTable};
pub use fuzzy_pid::{FuzzyConfig, FuzzyPid, FuzzyPidConfig, PidGains};

/// Per-slot routing decision: `a_p` feeds the PCC, `a_s` feeds every SCC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitAction {
    pub a_p: bool,
    pub a_s: bool,
}

impl SplitAction {
    pub const PCC: SplitAction = SplitAction { a_p: true, a_s: false };
    pub const SCC: SplitAction = SplitAction { a_p: false, a_s: true };
    pub const BOTH: SplitAction = SplitAction { a_p: true, a_s: true };
    pub const IDLE: SplitAction = SplitAction { a_p: false, a_s: false };

    /// Complementary action with the given PCC bit.
    pub const fn pcc_if(a_p: bool) -> SplitAction {
        SplitAction { a_p, a_s: !a_p }
    }

    #[inline]
    pub fn is_complementary(self) -> bool {
        self.a_p != self.a_s
    }

    /// All four points of {0,1}².
    pub const ALL: [SplitAction; 4] = [Self::IDLE, Self::PCC, Self::SCC, Self::BOTH];
}

/// What a controller may look at when deciding for slot `t`.
///
/// Everything here is local to the gNBs: RLC occupancies, packets still on the
/// backhaul, and what MAC served in the previous slot.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub t: Slot,
    /// PCC RLC occupancy minus the sum of SCC RLC occupancies.
    pub b: i64,
    /// RLC occupancy per carrier, PCC first.
    pub occupancy: &'a [usize],
    /// Packets on the Xn link per carrier (always 0 for the PCC).
    pub inflight: &'a [usize],
    /// Packets each carrier served in the previous slot.
    pub served_last: &'a [u32],
    /// Packets the UE received in the previous slot.
    pub received_last: u32,
    pub n_scc: usize,
    pub d_xn: Slot,
}

/// Controller internals exported to the per-slot trace.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerSnapshot {
    pub gains: Option<PidGains>,
    pub g: Option<f64>,
    pub k: Option<u32>,
    pub dynamic: bool,
}

/// A PDCP traffic splitter.
pub trait Splitter {
    fn name(&self) -> &'static str;

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction;

    fn snapshot(&self) -> ControllerSnapshot {
        ControllerSnapshot::default()
    }
}

impl<S: Splitter + ?Sized> Splitter for Box<S> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        (**self).decide(obs)
    }

    fn snapshot(&self) -> ControllerSnapshot {
        (**self).snapshot()
    }
}

/// Emits the same action every slot. Backs the PCC-only and SCC-only modes and
/// stationary-strategy sweeps.
#[derive(Debug, Clone, Copy)]
pub struct Fixed(pub SplitAction);

impl Splitter for Fixed {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn decide(&mut self, _obs: &Observation<'_>) -> SplitAction {
        self.0
    }
}

/// Stationary strategy: a repeating cycle of `pcc_slots` PCC slots followed by
/// `scc_slots` SCC slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stationary {
    pub pcc_slots: u32,
    pub scc_slots: u32,
}

impl Stationary {
    pub const fn new(pcc_slots: u32, scc_slots: u32) -> Self {
        Self { pcc_slots, scc_slots }
    }

    pub fn cycle(&self) -> u32 {
        (self.pcc_slots + self.scc_slots).max(1)
    }

    pub fn action_at(&self, t: Slot) -> SplitAction {
        SplitAction::pcc_if(t % u64::from(self.cycle()) < u64::from(self.pcc_slots))
    }

    /// One full cycle of actions.
    pub fn pattern(&self) -> alloc::vec::Vec<SplitAction> {
        (0..u64::from(self.cycle())).map(|t| self.action_at(t)).collect()
    }

    /// Σ_s ΣA_s / ΣA_P over one cycle; `None` if the PCC is never used.
    pub fn split_ratio(&self, n_scc: usize) -> Option<f64> {
        (self.pcc_slots > 0).then(|| (self.scc_slots as f64 * n_scc as f64) / self.pcc_slots as f64)
    }
}

impl Splitter for Stationary {
    fn name(&self) -> &'static str {
        "stationary"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        self.action_at(obs.t)
    }
}

/// Replays a fixed action sequence, idling once it runs out.
#[derive(Debug, Clone)]
pub struct Scripted {
    pub actions: alloc::vec::Vec<SplitAction>,
}

impl Splitter for Scripted {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        self.actions.get(obs.t as usize).copied().unwrap_or(SplitAction::IDLE)
    }
}
