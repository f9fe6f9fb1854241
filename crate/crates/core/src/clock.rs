//! Slotted time base and the fixed evaluation order of one slot.

use core::fmt;

use crate::error::SimError;

/// Slot index. All dynamics are expressed in slots.
pub type Slot = u64;

/// Default slot length in seconds. Metadata only; nothing in the dynamics reads it.
pub const DEFAULT_SLOT_DURATION_S: f64 = 1e-3;

/// One stage of a simulated slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Draw this slot's fading and derive SINR and MAC capacity per carrier.
    SampleChannel,
    /// The splitter picks the routing action from the buffer observation.
    Decide,
    /// Source arrivals enter PDCP and head-of-line packets leave towards the carriers.
    PdcpDispatch,
    /// SCC-bound packets whose backhaul delay has elapsed land in their RLC buffer.
    XnArrivals,
    /// Every RLC buffer hands up to its capacity to MAC/PHY.
    RlcServe,
    /// The UE collects this slot's deliveries.
    UeReceive,
    /// The slot is appended to the trace.
    TraceRecord,
    /// t ← t + 1.
    ClockAdvance,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::SampleChannel => "sample_channel",
            Phase::Decide => "decide",
            Phase::PdcpDispatch => "pdcp_dispatch",
            Phase::XnArrivals => "xn_arrivals",
            Phase::RlcServe => "rlc_serve",
            Phase::UeReceive => "ue_receive",
            Phase::TraceRecord => "trace_record",
            Phase::ClockAdvance => "clock_advance",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The per-slot phase order used by every run.
///
/// Arrivals into an RLC buffer (dispatch, then backhaul) precede service in the
/// same slot, so a packet handed to the PCC can leave on that slot.
pub const fn step_order() -> [Phase; 8] {
    [
        Phase::SampleChannel,
        Phase::Decide,
        Phase::PdcpDispatch,
        Phase::XnArrivals,
        Phase::RlcServe,
        Phase::UeReceive,
        Phase::TraceRecord,
        Phase::ClockAdvance,
    ]
}

/// Monotone slot counter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotClock {
    t: Slot,
    slot_duration_s: f64,
}

impl Default for SlotClock {
    fn default() -> Self {
        Self::new(DEFAULT_SLOT_DURATION_S)
    }
}

impl SlotClock {
    pub fn new(slot_duration_s: f64) -> Self {
        Self { t: 0, slot_duration_s }
    }

    pub fn at(t: Slot, slot_duration_s: f64) -> Self {
        Self { t, slot_duration_s }
    }

    #[inline]
    pub fn now(&self) -> Slot {
        self.t
    }

    #[inline]
    pub fn slot_duration_s(&self) -> f64 {
        self.slot_duration_s
    }

    /// Elapsed time in seconds at the start of the current slot.
    pub fn elapsed_s(&self) -> f64 {
        self.t as f64 * self.slot_duration_s
    }

    /// Returns the clock one slot later. Wrapping the counter is a fatal
    /// configuration error.
    pub fn advance(self) -> Result<SlotClock, SimError> {
        let t = self.t.checked_add(1).ok_or(SimError::ClockOverflow)?;
        Ok(SlotClock { t, ..self })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_has_eight_distinct_phases() {
        let order = step_order();
        assert_eq!(order.len(), 8);
        assert_eq!(order[0], Phase::SampleChannel);
        assert_eq!(order[1], Phase::Decide);
        assert_eq!(order[2], Phase::PdcpDispatch);
        assert_eq!(order[3], Phase::XnArrivals);
        assert_eq!(order[4], Phase::RlcServe);
        assert_eq!(order[5], Phase::UeReceive);
        assert_eq!(order[6], Phase::TraceRecord);
        assert_eq!(order[7], Phase::ClockAdvance);
        for (i, a) in order.iter().enumerate() {
            for b in &order[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn advance_increments() {
        let c = SlotClock::default();
        assert_eq!(c.advance().unwrap().now(), 1);
        let c = SlotClock::at(99, 1e-3);
        assert_eq!(c.advance().unwrap().now(), 100);
    }

    #[test]
    fn advance_a_million_times() {
        let mut c = SlotClock::default();
        for _ in 0..1_000_000 {
            c = c.advance().unwrap();
        }
        assert_eq!(c.now(), 1_000_000);
    }

    #[test]
    fn advance_overflow_is_an_error() {
        let c = SlotClock::at(u64::MAX, 1e-3);
        assert_eq!(c.advance(), Err(SimError::ClockOverflow));
    }
}
