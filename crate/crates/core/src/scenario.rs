//! Scenario description, UE trajectories, and assembly of runnable simulations.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::channel::{nominal_pcc_capacity, CarrierConfig, CarrierKind, RadioChannel};
use crate::clock::{Slot, DEFAULT_SLOT_DURATION_S};
use crate::error::SimError;
use crate::sim::{LinkModel, RunSetup, Simulation};
use crate::splitter::fuzzy_pid::{default_b_max, HoldRule, ImpulseAnchor, RuleTable, DEFAULT_HORIZON};
use crate::splitter::{
    Bwa, Fixed, FuzzyConfig, FuzzyPid, FuzzyPidConfig, Ltr, PidGains, QLearning, QLearningConfig, SplitAction, Splitter,
};

/// How packets enter PDCP.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ArrivalMode {
    /// All L packets arrive at t = 0; the run ends when the UE holds L packets.
    #[default]
    Burst,
    /// A constant number of packets every slot.
    PerSlot { rate: u64 },
    /// Per-slot arrivals at the largest possible dispatch rate, so PDCP never runs dry.
    Saturated,
}

/// UE path relative to the primary gNB.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Trajectory {
    Static {
        distance_m: f64,
    },
    /// Drive away at `speed_mps` for `turn_time_s`, come back the same way, then stop.
    OutAndBack {
        start_m: f64,
        speed_mps: f64,
        turn_time_s: f64,
    },
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory::Static { distance_m: 100.0 }
    }
}

impl Trajectory {
    pub fn mobile_default() -> Self {
        Trajectory::OutAndBack {
            start_m: 100.0,
            speed_mps: 10.0,
            turn_time_s: 10.0,
        }
    }

    /// Distance to the primary gNB at time `time_s`.
    pub fn distance_at(&self, time_s: f64) -> f64 {
        match *self {
            Trajectory::Static { distance_m } => distance_m,
            Trajectory::OutAndBack {
                start_m,
                speed_mps,
                turn_time_s,
            } => {
                let travelled = if time_s <= turn_time_s {
                    time_s
                } else if time_s <= 2.0 * turn_time_s {
                    2.0 * turn_time_s - time_s
                } else {
                    0.0
                };
                start_m + speed_mps * travelled
            }
        }
    }

    pub fn max_speed(&self) -> f64 {
        match *self {
            Trajectory::Static { .. } => 0.0,
            Trajectory::OutAndBack { speed_mps, .. } => speed_mps,
        }
    }
}

/// UE position for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: Slot,
    pub distance_p: f64,
    pub distance_s: f64,
}

/// UE distances at slot `t`. The secondary gNB sits `secondary_offset_m` further
/// along the path than the primary (0 = co-located).
pub fn ue_distance(traj: &Trajectory, t: Slot, slot_duration_s: f64, secondary_offset_m: f64) -> TrajectorySample {
    let d = traj.distance_at(t as f64 * slot_duration_s);
    TrajectorySample {
        t,
        distance_p: d.max(1.0),
        distance_s: (d - secondary_offset_m).abs().max(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RunMode {
    /// Carrier aggregation driven by the configured policy.
    Ca,
    /// A_P = 1 every slot, saturated source.
    PccOnly,
    /// A_s = 1 every slot, saturated source.
    SccOnly,
}

impl RunMode {
    pub const ALL: [RunMode; 3] = [RunMode::Ca, RunMode::PccOnly, RunMode::SccOnly];

    pub fn label(self) -> &'static str {
        match self {
            RunMode::Ca => "ca",
            RunMode::PccOnly => "pcc",
            RunMode::SccOnly => "scc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PolicyKind {
    #[default]
    FuzzyPid,
    Bwa,
    Ltr,
    NofuzzyPid,
    Qlearning,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::FuzzyPid,
        PolicyKind::Bwa,
        PolicyKind::Ltr,
        PolicyKind::NofuzzyPid,
        PolicyKind::Qlearning,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::FuzzyPid => "fuzzy_pid",
            PolicyKind::Bwa => "bwa",
            PolicyKind::Ltr => "ltr",
            PolicyKind::NofuzzyPid => "nofuzzy_pid",
            PolicyKind::Qlearning => "qlearning",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == s)
    }
}

/// Fuzzy-PID settings as they appear in a scenario. `b_max = None` picks the
/// default 2·N·max(⌊ρ_P/ρ_s⌋, N_SCC).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ControllerConfig {
    pub horizon: u32,
    pub b_max: Option<f64>,
    pub initial_gains: PidGains,
    pub gain_min: f64,
    pub gain_max: f64,
    pub t_p: RuleTable,
    pub t_i: RuleTable,
    pub t_d: RuleTable,
    pub membership_width: f64,
    pub anchor: ImpulseAnchor,
    pub hold: HoldRule,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            b_max: None,
            initial_gains: PidGains::default(),
            gain_min: 0.0,
            gain_max: 5.0,
            t_p: FuzzyConfig::DEFAULT_T_P,
            t_i: FuzzyConfig::DEFAULT_T_I,
            t_d: FuzzyConfig::DEFAULT_T_D,
            membership_width: 1.0,
            anchor: ImpulseAnchor::Window,
            hold: HoldRule::Schedule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LtrConfig {
    pub smoothing: f64,
    pub eps_rate: f64,
}

impl Default for LtrConfig {
    fn default() -> Self {
        Self {
            smoothing: Ltr::DEFAULT_SMOOTHING,
            eps_rate: Ltr::DEFAULT_EPS_RATE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct QLearningParams {
    pub bins: usize,
    pub b_max: Option<f64>,
    pub epsilon: f64,
    pub learn_rate: f64,
    pub discount: f64,
}

impl Default for QLearningParams {
    fn default() -> Self {
        Self {
            bins: 16,
            b_max: None,
            epsilon: 0.1,
            learn_rate: 0.1,
            discount: 0.9,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    /// Workload L in packets (burst size).
    pub packets: u64,
    pub arrival: ArrivalMode,
    /// PCC first, then SCC 1..=N_SCC.
    pub carriers: Vec<CarrierConfig>,
    /// Xn backhaul delay in slots.
    pub d_xn: Slot,
    /// Packets handed to each active carrier per slot. `None` → ⌊ρ_P/ρ_s⌋ + 1.
    pub dispatch_quantum: Option<u32>,
    pub trajectory: Trajectory,
    pub secondary_offset_m: f64,
    pub slot_duration_s: f64,
    pub max_slots: Slot,
    pub seed: u64,
    pub policy: PolicyKind,
    pub controller: ControllerConfig,
    pub ltr: LtrConfig,
    pub qlearning: QLearningParams,
}

impl ScenarioConfig {
    /// Static UE 100 m from the primary gNB, burst of 10⁴ packets.
    pub fn static_default(n_scc: usize) -> Self {
        let mut carriers = Vec::with_capacity(n_scc + 1);
        carriers.push(CarrierConfig::default_pcc());
        carriers.extend((1..=n_scc).map(CarrierConfig::default_scc));
        Self {
            packets: 10_000,
            arrival: ArrivalMode::Burst,
            carriers,
            d_xn: 2,
            dispatch_quantum: None,
            trajectory: Trajectory::default(),
            secondary_offset_m: 0.0,
            slot_duration_s: DEFAULT_SLOT_DURATION_S,
            max_slots: 200_000,
            seed: 0,
            policy: PolicyKind::FuzzyPid,
            controller: ControllerConfig::default(),
            ltr: LtrConfig::default(),
            qlearning: QLearningParams::default(),
        }
    }

    /// Out-and-back UE at 10 m/s with a saturated source over the 20 s round trip.
    pub fn mobile_default(n_scc: usize) -> Self {
        let mut cfg = Self::static_default(n_scc);
        cfg.trajectory = Trajectory::mobile_default();
        cfg.arrival = ArrivalMode::Saturated;
        cfg.max_slots = 20_000;
        cfg
    }

    /// All carriers flat (σ² = 0, zero fixed loss) with the default ρ values.
    pub fn flat(n_scc: usize) -> Self {
        let mut cfg = Self::static_default(n_scc);
        for c in &mut cfg.carriers {
            c.sigma2 = 0.0;
            c.path_loss = crate::channel::PathLossModel::Fixed { pl_db: 0.0 };
        }
        cfg
    }

    pub fn n_scc(&self) -> usize {
        self.carriers.len().saturating_sub(1)
    }

    /// ρ_s shared by all SCCs.
    pub fn rho_s(&self) -> f64 {
        self.carriers.get(1).map_or(1.0, |c| c.rho)
    }

    /// ⌊ρ_P/ρ_s⌋.
    pub fn pcc_capacity(&self) -> u32 {
        nominal_pcc_capacity(self.carriers[0].rho, self.rho_s())
    }

    pub fn quantum(&self) -> u32 {
        self.dispatch_quantum.unwrap_or(self.pcc_capacity() + 1)
    }

    /// Largest number of packets PDCP can release in one slot.
    pub fn max_dispatch_per_slot(&self) -> u64 {
        u64::from(self.quantum()) * (self.n_scc() as u64 + 1)
    }

    pub fn b_max(&self) -> f64 {
        self.controller
            .b_max
            .unwrap_or_else(|| default_b_max(self.controller.horizon, self.pcc_capacity(), self.n_scc()))
    }

    pub fn fuzzy_pid_config(&self) -> FuzzyPidConfig {
        let c = &self.controller;
        FuzzyPidConfig {
            horizon: c.horizon,
            initial_gains: c.initial_gains,
            gain_min: c.gain_min,
            gain_max: c.gain_max,
            fuzzy: FuzzyConfig {
                b_max: self.b_max(),
                t_p: c.t_p,
                t_i: c.t_i,
                t_d: c.t_d,
                membership_width: c.membership_width,
            },
            adapt_gains: true,
            anchor: c.anchor,
            hold: c.hold,
        }
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.carriers.len() < 2 {
            return Err(SimError::config("carriers", "need one PCC and at least one SCC"));
        }
        if self.carriers[0].kind != CarrierKind::Pcc {
            return Err(SimError::config("carriers.pcc", "first carrier must be the PCC"));
        }
        for (i, c) in self.carriers.iter().enumerate().skip(1) {
            if c.kind != CarrierKind::Scc(i) {
                return Err(SimError::config(
                    format!("carriers.scc{i}"),
                    "SCCs must be numbered 1..=N_SCC in order",
                ));
            }
        }
        let rho_s = self.rho_s();
        for c in &self.carriers {
            let name = match c.kind {
                CarrierKind::Pcc => "carriers.pcc".into(),
                CarrierKind::Scc(s) => format!("carriers.scc{s}"),
            };
            if !(c.rho > 0.0) {
                return Err(SimError::config(format!("{name}.rho"), "must be positive"));
            }
            if let CarrierKind::Scc(_) = c.kind {
                if c.rho != rho_s {
                    return Err(SimError::config(format!("{name}.rho"), "all SCCs must share one rho"));
                }
            }
            if !(c.sigma2 >= 0.0) || !c.sigma2.is_finite() {
                return Err(SimError::config(
                    format!("{name}.sigma2"),
                    "must be finite and non-negative",
                ));
            }
            if !(c.n_th > 0.0) {
                return Err(SimError::config(format!("{name}.n_th"), "must be positive"));
            }
            if !(c.frequency_ghz > 0.0) {
                return Err(SimError::config(format!("{name}.frequency_ghz"), "must be positive"));
            }
            if !(c.bandwidth_mhz >= 0.0) {
                return Err(SimError::config(
                    format!("{name}.bandwidth_mhz"),
                    "must be non-negative",
                ));
            }
        }
        if self.carriers[0].rho < rho_s {
            return Err(SimError::config(
                "carriers.pcc.rho",
                "PCC rho must be at least the SCC rho",
            ));
        }
        if self.controller.horizon < 2 {
            return Err(SimError::config("controller.horizon", "must be at least 2"));
        }
        if !(self.controller.gain_min <= self.controller.gain_max) {
            return Err(SimError::config("controller.gain_min", "must not exceed gain_max"));
        }
        if let Some(b) = self.controller.b_max {
            if !(b > 0.0) {
                return Err(SimError::config("controller.b_max", "must be positive"));
            }
        }
        if !(self.controller.membership_width > 0.0) {
            return Err(SimError::config("controller.membership_width", "must be positive"));
        }
        if self.quantum() == 0 {
            return Err(SimError::config("workload.dispatch_quantum", "must be positive"));
        }
        if self.max_slots == 0 {
            return Err(SimError::config("run.max_slots", "must be positive"));
        }
        if !(self.slot_duration_s > 0.0) {
            return Err(SimError::config("run.slot_duration_s", "must be positive"));
        }
        match self.trajectory {
            Trajectory::Static { distance_m } if !(distance_m >= 1.0) => {
                return Err(SimError::config("trajectory.distance_m", "must be at least 1 m"));
            }
            Trajectory::OutAndBack {
                start_m,
                speed_mps,
                turn_time_s,
            } => {
                if !(start_m >= 1.0) {
                    return Err(SimError::config("trajectory.start_m", "must be at least 1 m"));
                }
                if !(speed_mps >= 0.0) {
                    return Err(SimError::config("trajectory.speed_mps", "must be non-negative"));
                }
                if !(turn_time_s >= 0.0) {
                    return Err(SimError::config("trajectory.turn_time_s", "must be non-negative"));
                }
            }
            _ => {}
        }
        if let ArrivalMode::PerSlot { rate } = self.arrival {
            if rate == 0 {
                return Err(SimError::config("workload.rate", "must be positive"));
            }
        }
        let q = &self.qlearning;
        if q.bins == 0 {
            return Err(SimError::config("controller.qlearning.bins", "must be positive"));
        }
        if !(0.0..=1.0).contains(&q.epsilon) {
            return Err(SimError::config("controller.qlearning.epsilon", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&q.discount) {
            return Err(SimError::config("controller.qlearning.discount", "must lie in [0, 1)"));
        }
        if !(self.ltr.smoothing > 0.0 && self.ltr.smoothing <= 1.0) {
            return Err(SimError::config("controller.ltr.smoothing", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// The configured CA policy.
    pub fn make_splitter(&self) -> Box<dyn Splitter> {
        let n_scc = self.n_scc();
        match self.policy {
            PolicyKind::FuzzyPid => Box::new(FuzzyPid::new(self.fuzzy_pid_config(), n_scc)),
            PolicyKind::NofuzzyPid => Box::new(FuzzyPid::new(self.fuzzy_pid_config().without_fuzzy(), n_scc)),
            PolicyKind::Bwa => {
                let scc_bw: Vec<f64> = self.carriers[1..].iter().map(|c| c.bandwidth_mhz).collect();
                Box::new(Bwa::new(self.carriers[0].bandwidth_mhz, &scc_bw))
            }
            PolicyKind::Ltr => Box::new(Ltr::new(n_scc + 1, self.ltr.smoothing, self.ltr.eps_rate)),
            PolicyKind::Qlearning => {
                let q = &self.qlearning;
                let cfg = QLearningConfig {
                    bins: q.bins,
                    b_max: q.b_max.unwrap_or_else(|| self.b_max()),
                    epsilon: q.epsilon,
                    learn_rate: q.learn_rate,
                    discount: q.discount,
                };
                Box::new(QLearning::new(cfg, self.seed))
            }
        }
    }
}

impl ScenarioConfig {
    /// Run parameters for this scenario with the given arrival process.
    pub fn run_setup(&self, arrival: ArrivalMode) -> RunSetup {
        RunSetup {
            n_scc: self.n_scc(),
            quantum: self.quantum(),
            d_xn: self.d_xn,
            packets: self.packets,
            arrival,
            max_slots: self.max_slots,
            trajectory: self.trajectory,
            secondary_offset_m: self.secondary_offset_m,
            slot_duration_s: self.slot_duration_s,
        }
    }

    fn radio(&self) -> LinkModel {
        LinkModel::Radio(RadioChannel::new(self.carriers.clone(), self.rho_s(), self.seed))
    }
}

/// Validates `cfg` and wires a simulation for `mode`.
///
/// Standalone modes pin the action and always use a saturated source so their
/// deliveries measure link capacity.
pub fn build_run(cfg: &ScenarioConfig, mode: RunMode) -> Result<Simulation, SimError> {
    cfg.validate()?;
    let (splitter, arrival): (Box<dyn Splitter>, ArrivalMode) = match mode {
        RunMode::Ca => (cfg.make_splitter(), cfg.arrival),
        RunMode::PccOnly => (Box::new(Fixed(SplitAction::PCC)), ArrivalMode::Saturated),
        RunMode::SccOnly => (Box::new(Fixed(SplitAction::SCC)), ArrivalMode::Saturated),
    };
    Ok(Simulation::new(cfg.run_setup(arrival), cfg.radio(), splitter))
}

/// Like [`build_run`] in CA mode, but driven by an arbitrary splitter.
pub fn build_with_splitter(cfg: &ScenarioConfig, splitter: Box<dyn Splitter>) -> Result<Simulation, SimError> {
    cfg.validate()?;
    Ok(Simulation::new(cfg.run_setup(cfg.arrival), cfg.radio(), splitter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn static_distance_is_constant() {
        let traj = Trajectory::Static { distance_m: 100.0 };
        for t in [0, 1, 5_000, 1_000_000] {
            assert_eq!(ue_distance(&traj, t, 1e-3, 0.0).distance_p, 100.0);
        }
    }

    #[test]
    fn out_and_back_profile() {
        let traj = Trajectory::mobile_default();
        let at = |s: f64| ue_distance(&traj, (s * 1000.0) as u64, 1e-3, 0.0).distance_p;
        assert_abs_diff_eq!(at(5.0), 150.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at(10.0), 200.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at(15.0), 150.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at(20.0), 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(at(30.0), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn secondary_offset() {
        let traj = Trajectory::Static { distance_m: 100.0 };
        let s = ue_distance(&traj, 0, 1e-3, 40.0);
        assert_eq!(s.distance_p, 100.0);
        assert_eq!(s.distance_s, 60.0);
        let s = ue_distance(&traj, 0, 1e-3, 100.0);
        assert_eq!(s.distance_s, 1.0);
    }

    #[test]
    fn default_scenarios_validate() {
        for n in 1..=3 {
            ScenarioConfig::static_default(n).validate().unwrap();
            ScenarioConfig::mobile_default(n).validate().unwrap();
            ScenarioConfig::flat(n).validate().unwrap();
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = ScenarioConfig::static_default(2);
        cfg.carriers[2].sigma2 = -1.0;
        match cfg.validate() {
            Err(SimError::InvalidConfig { field, .. }) => assert_eq!(field, "carriers.scc2.sigma2"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ScenarioConfig::static_default(2);
        cfg.carriers.truncate(1);
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig { field, .. }) if field == "carriers"));
        let mut cfg = ScenarioConfig::static_default(1);
        cfg.controller.horizon = 1;
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig { field, .. }) if field == "controller.horizon"));
    }

    #[test]
    fn default_quantum_and_b_max() {
        let cfg = ScenarioConfig::static_default(3);
        assert_eq!(cfg.pcc_capacity(), 2);
        assert_eq!(cfg.quantum(), 3);
        assert_eq!(cfg.b_max(), 2.0 * 16.0 * 3.0);
    }
}
