//! Slot-level simulator of PDCP traffic splitting over carrier aggregation.
//!
//! The crate is `no_std` (with `alloc`). File formats, the CLI and experiment
//! orchestration live in the `casplit` crate.

#![no_std]

extern crate alloc;

pub mod channel;
pub mod clock;
pub mod error;
pub mod math;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod splitter;
pub mod stack;

pub use channel::{
    CarrierConfig, CarrierKind, ChannelState, FadingFamily, PathLossModel, RadioChannel, ScriptedCapacity,
};
pub use clock::{Phase, Slot, SlotClock};
pub use error::SimError;
pub use rng::{RngStream, StreamId};
pub use scenario::{build_run, build_with_splitter, ArrivalMode, PolicyKind, RunMode, ScenarioConfig, Trajectory};
pub use sim::{LinkModel, RunOutcome, RunSetup, Simulation, SlotRecord};
pub use splitter::{Observation, SplitAction, Splitter};
