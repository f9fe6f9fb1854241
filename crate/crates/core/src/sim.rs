//! Slot-by-slot driver tying the channel, the protocol stack and a splitter together.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{ChannelState, RadioChannel, ScriptedCapacity};
use crate::clock::{step_order, Phase, Slot, SlotClock};
use crate::error::SimError;
use crate::scenario::{ue_distance, ArrivalMode, Trajectory};
use crate::splitter::{ControllerSnapshot, Observation, SplitAction, Splitter};
use crate::stack::{Dispatch, Packet, PdcpState, RlcState, UeState};

/// Where per-slot capacities come from.
#[derive(Debug, Clone)]
pub enum LinkModel {
    Radio(RadioChannel),
    Scripted(ScriptedCapacity),
}

/// Run-level parameters that stay fixed while the simulation executes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSetup {
    pub n_scc: usize,
    pub quantum: u32,
    pub d_xn: Slot,
    /// Burst size L; ignored by the per-slot arrival modes.
    pub packets: u64,
    pub arrival: ArrivalMode,
    pub max_slots: Slot,
    pub trajectory: Trajectory,
    pub secondary_offset_m: f64,
    pub slot_duration_s: f64,
}

impl RunSetup {
    /// A deterministic setup for scripted-capacity runs.
    pub fn scripted(n_scc: usize, quantum: u32, d_xn: Slot, packets: u64, max_slots: Slot) -> Self {
        Self {
            n_scc,
            quantum,
            d_xn,
            packets,
            arrival: ArrivalMode::Burst,
            max_slots,
            trajectory: Trajectory::default(),
            secondary_offset_m: 0.0,
            slot_duration_s: crate::clock::DEFAULT_SLOT_DURATION_S,
        }
    }

    fn max_dispatch(&self) -> u64 {
        u64::from(self.quantum) * (self.n_scc as u64 + 1)
    }
}

/// One row of the per-slot trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotRecord {
    pub t: Slot,
    pub distance_m: f64,
    /// B(t) as seen by the splitter.
    pub b: i64,
    pub a_p: bool,
    pub a_s: bool,
    /// MAC capacity per carrier, PCC first.
    pub capacity: Vec<u32>,
    /// RLC occupancy per carrier after service.
    pub occupancy: Vec<usize>,
    pub delivered: u32,
    pub k_p: Option<f64>,
    pub k_i: Option<f64>,
    pub k_d: Option<f64>,
    pub g: Option<f64>,
    pub k: Option<u32>,
    pub dynamic: bool,
}

/// Final counters of a finished (or aborted) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub policy: &'static str,
    /// Slots executed.
    pub slots: Slot,
    pub ingested: u64,
    pub delivered: u64,
    /// Packets the UE received in each slot.
    pub per_slot: Vec<u32>,
    /// Burst mode only: whether all L packets reached the UE.
    pub completed: bool,
}

#[derive(Debug, Default)]
struct Scratch {
    channel: Option<ChannelState>,
    b: i64,
    action: SplitAction,
    snapshot: ControllerSnapshot,
    dispatch: Option<Dispatch>,
    served: Option<Vec<Vec<Packet>>>,
    received: u32,
}

/// A single run. Construct with [`Simulation::new`] or `scenario::build_run`.
pub struct Simulation {
    setup: RunSetup,
    clock: SlotClock,
    links: LinkModel,
    pdcp: PdcpState,
    rlc: RlcState,
    ue: UeState,
    splitter: Box<dyn Splitter>,
    order: [Phase; 8],
    scratch: Scratch,
    served_last: Vec<u32>,
    received_last: u32,
    ingested: u64,
    record_trace: bool,
    trace: Vec<SlotRecord>,
}

impl core::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Simulation")
            .field("setup", &self.setup)
            .field("t", &self.clock.now())
            .field("policy", &self.splitter.name())
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(setup: RunSetup, links: LinkModel, splitter: Box<dyn Splitter>) -> Self {
        let n = setup.n_scc + 1;
        Self {
            clock: SlotClock::new(setup.slot_duration_s),
            links,
            pdcp: PdcpState::new(n),
            rlc: RlcState::new(n, setup.d_xn),
            ue: UeState::new(),
            splitter,
            order: step_order(),
            scratch: Scratch::default(),
            served_last: vec![0; n],
            received_last: 0,
            ingested: 0,
            record_trace: true,
            trace: Vec::new(),
            setup,
        }
    }

    /// Runs against a fixed capacity script; the building block for the oracle and
    /// deterministic tests.
    pub fn scripted(setup: RunSetup, capacities: ScriptedCapacity, splitter: Box<dyn Splitter>) -> Self {
        Self::new(setup, LinkModel::Scripted(capacities), splitter)
    }

    /// Turns per-slot trace recording on or off (on by default).
    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    /// Replaces the phase order. Only meant for tests probing order sensitivity.
    pub fn with_phase_order(mut self, order: [Phase; 8]) -> Self {
        self.order = order;
        self
    }

    pub fn setup(&self) -> &RunSetup {
        &self.setup
    }

    pub fn now(&self) -> Slot {
        self.clock.now()
    }

    pub fn pdcp(&self) -> &PdcpState {
        &self.pdcp
    }

    pub fn rlc(&self) -> &RlcState {
        &self.rlc
    }

    pub fn ue(&self) -> &UeState {
        &self.ue
    }

    pub fn splitter(&self) -> &dyn Splitter {
        &*self.splitter
    }

    pub fn trace(&self) -> &[SlotRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<SlotRecord> {
        core::mem::take(&mut self.trace)
    }

    pub fn ingested(&self) -> u64 {
        self.ingested
    }

    /// Packets anywhere in the system: PDCP, Xn, RLC and the UE.
    pub fn accounted(&self) -> u64 {
        self.pdcp.len() as u64 + self.rlc.total_inflight() as u64 + self.rlc.total_buffered() as u64 + self.ue.total()
    }

    /// True once the burst is fully delivered or the slot budget is spent.
    pub fn is_done(&self) -> bool {
        if self.clock.now() >= self.setup.max_slots {
            return true;
        }
        matches!(self.setup.arrival, ArrivalMode::Burst) && self.ue.total() >= self.setup.packets
    }

    /// Executes one slot in the configured phase order.
    pub fn step(&mut self) -> Result<(), SimError> {
        for phase in self.order {
            self.run_phase(phase)?;
        }
        Ok(())
    }

    /// Steps until [`is_done`](Self::is_done).
    pub fn run(&mut self) -> Result<RunOutcome, SimError> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(self.outcome())
    }

    pub fn outcome(&self) -> RunOutcome {
        RunOutcome {
            policy: self.splitter.name(),
            slots: self.clock.now(),
            ingested: self.ingested,
            delivered: self.ue.total(),
            per_slot: self.ue.per_slot().to_vec(),
            completed: matches!(self.setup.arrival, ArrivalMode::Burst) && self.ue.total() >= self.setup.packets,
        }
    }

    fn arrivals(&self, t: Slot) -> u64 {
        match self.setup.arrival {
            ArrivalMode::Burst => {
                if t == 0 {
                    self.setup.packets
                } else {
                    0
                }
            }
            ArrivalMode::PerSlot { rate } => rate,
            // Top up so a full dispatch is always possible.
            ArrivalMode::Saturated => self.setup.max_dispatch().saturating_sub(self.pdcp.len() as u64),
        }
    }

    fn run_phase(&mut self, phase: Phase) -> Result<(), SimError> {
        let t = self.clock.now();
        match phase {
            Phase::SampleChannel => {
                let state = match &mut self.links {
                    LinkModel::Radio(radio) => {
                        let pos = ue_distance(
                            &self.setup.trajectory,
                            t,
                            self.setup.slot_duration_s,
                            self.setup.secondary_offset_m,
                        );
                        radio.sample(pos.distance_p, pos.distance_s)?
                    }
                    LinkModel::Scripted(script) => script.sample(t),
                };
                self.scratch.channel = Some(state);
            }
            Phase::Decide => {
                let occupancy = self.rlc.occupancies();
                let inflight = self.rlc.inflights();
                let b = self.rlc.buffer_difference();
                let obs = Observation {
                    t,
                    b,
                    occupancy: &occupancy,
                    inflight: &inflight,
                    served_last: &self.served_last,
                    received_last: self.received_last,
                    n_scc: self.setup.n_scc,
                    d_xn: self.setup.d_xn,
                };
                self.scratch.b = b;
                self.scratch.action = self.splitter.decide(&obs);
                self.scratch.snapshot = self.splitter.snapshot();
            }
            Phase::PdcpDispatch => {
                let arrivals = self.arrivals(t);
                self.pdcp.ingest(arrivals, t);
                self.ingested += arrivals;
                let d = self.pdcp.dispatch(self.scratch.action, self.setup.quantum);
                self.rlc.accept(d.clone(), t);
                self.scratch.dispatch = Some(d);
            }
            Phase::XnArrivals => self.rlc.xn_tick(t),
            Phase::RlcServe => {
                let n = self.setup.n_scc + 1;
                let caps: Vec<u32> = match &self.scratch.channel {
                    Some(c) => c.capacities().collect(),
                    None => vec![0; n],
                };
                self.scratch.served = Some(self.rlc.serve(&caps));
            }
            Phase::UeReceive => {
                let served = self.scratch.served.take().unwrap_or_default();
                self.scratch.received = self.ue.receive(&served)?;
                for (last, s) in self.served_last.iter_mut().zip(served.iter()) {
                    *last = s.len() as u32;
                }
                self.received_last = self.scratch.received;
            }
            Phase::TraceRecord => {
                if self.record_trace {
                    let row = self.record(t);
                    self.trace.push(row);
                }
            }
            Phase::ClockAdvance => {
                self.clock = self.clock.advance()?;
                self.scratch.channel = None;
                self.scratch.dispatch = None;
            }
        }
        Ok(())
    }

    fn record(&self, t: Slot) -> SlotRecord {
        let snap = self.scratch.snapshot;
        let (capacity, distance_m) = match &self.scratch.channel {
            Some(c) => (c.capacities().collect(), c.distance_p),
            None => (vec![0; self.setup.n_scc + 1], 0.0),
        };
        SlotRecord {
            t,
            distance_m,
            b: self.scratch.b,
            a_p: self.scratch.action.a_p,
            a_s: self.scratch.action.a_s,
            capacity,
            occupancy: self.rlc.occupancies(),
            delivered: self.scratch.received,
            k_p: snap.gains.map(|g| g.k_p),
            k_i: snap.gains.map(|g| g.k_i),
            k_d: snap.gains.map(|g| g.k_d),
            g: snap.g,
            k: snap.k,
            dynamic: snap.dynamic,
        }
    }
}
