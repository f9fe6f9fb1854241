//! PDCP and RLC queues, the Xn backhaul, MAC service and UE reception.
//!
//! Carrier index 0 is always the PCC; index `s` (1-based) is SCC `s`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Slot;
use crate::error::SimError;
use crate::splitter::SplitAction;

/// One PDCP SDU, identified by its sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Packet {
    pub seq: u64,
    pub ingest_slot: Slot,
}

/// PDCP transmit buffer.
///
/// Sequence numbers start at 0. `n_min` is the sequence number at the head of
/// the queue and `n_max` is one past the newest packet, so the queue always
/// holds exactly `n_max − n_min` packets.
#[derive(Debug, Clone, PartialEq)]
pub struct PdcpState {
    queue: VecDeque<Packet>,
    n_min: u64,
    n_max: u64,
    out_count: Vec<u64>,
}

/// Packets that left PDCP in one slot, grouped by destination carrier.
pub type Dispatch = Vec<Vec<Packet>>;

impl PdcpState {
    pub fn new(n_carriers: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            n_min: 0,
            n_max: 0,
            out_count: vec![0; n_carriers],
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// Cumulative packets handed to each carrier.
    pub fn out_count(&self) -> &[u64] {
        &self.out_count
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    /// Appends `arrivals` fresh packets stamped with slot `now`.
    pub fn ingest(&mut self, arrivals: u64, now: Slot) {
        for _ in 0..arrivals {
            self.queue.push_back(Packet {
                seq: self.n_max,
                ingest_slot: now,
            });
            self.n_max += 1;
        }
    }

    /// Moves head-of-line packets towards the carriers selected by `action`.
    ///
    /// Runs `quantum` rounds; each round hands one packet to every active carrier
    /// in index order (PCC first). Dispatch stops early when the queue runs dry.
    pub fn dispatch(&mut self, action: SplitAction, quantum: u32) -> Dispatch {
        let n_carriers = self.out_count.len();
        let mut out: Dispatch = vec![Vec::new(); n_carriers];
        'rounds: for _ in 0..quantum {
            for (c, dest) in out.iter_mut().enumerate() {
                let active = if c == 0 { action.a_p } else { action.a_s };
                if !active {
                    continue;
                }
                match self.pop() {
                    Some(p) => dest.push(p),
                    None => break 'rounds,
                }
            }
        }
        for (count, sent) in self.out_count.iter_mut().zip(&out) {
            *count += sent.len() as u64;
        }
        out
    }

    fn pop(&mut self) -> Option<Packet> {
        let p = self.queue.pop_front()?;
        self.n_min += 1;
        Some(p)
    }
}

/// RLC transmit buffers per carrier plus the SCC-bound packets still on the Xn link.
#[derive(Debug, Clone, PartialEq)]
pub struct RlcState {
    buffers: Vec<VecDeque<Packet>>,
    xn_inflight: Vec<VecDeque<(Packet, Slot)>>,
    d_xn: Slot,
}

impl RlcState {
    pub fn new(n_carriers: usize, d_xn: Slot) -> Self {
        Self {
            buffers: vec![VecDeque::new(); n_carriers],
            xn_inflight: vec![VecDeque::new(); n_carriers],
            d_xn,
        }
    }

    pub fn n_carriers(&self) -> usize {
        self.buffers.len()
    }

    pub fn d_xn(&self) -> Slot {
        self.d_xn
    }

    pub fn occupancy(&self, carrier: usize) -> usize {
        self.buffers[carrier].len()
    }

    pub fn occupancies(&self) -> Vec<usize> {
        self.buffers.iter().map(VecDeque::len).collect()
    }

    pub fn inflight(&self, carrier: usize) -> usize {
        self.xn_inflight[carrier].len()
    }

    pub fn inflights(&self) -> Vec<usize> {
        self.xn_inflight.iter().map(VecDeque::len).collect()
    }

    pub fn buffered(&self, carrier: usize) -> impl Iterator<Item = &Packet> {
        self.buffers[carrier].iter()
    }

    pub fn in_transit(&self, carrier: usize) -> impl Iterator<Item = &Packet> {
        self.xn_inflight[carrier].iter().map(|(p, _)| p)
    }

    /// Scheduled arrival slots of the packets on carrier `carrier`'s Xn link, oldest first.
    pub fn inflight_arrivals(&self, carrier: usize) -> impl Iterator<Item = Slot> + '_ {
        self.xn_inflight[carrier].iter().map(|&(_, a)| a)
    }

    /// Accepts one slot's PDCP output. PCC packets land in the PCC buffer
    /// directly; SCC packets start their Xn transfer and arrive at `now + d_xn`.
    pub fn accept(&mut self, dispatch: Dispatch, now: Slot) {
        for (carrier, packets) in dispatch.into_iter().enumerate() {
            if carrier == 0 {
                self.buffers[0].extend(packets);
            } else {
                let arrival = now + self.d_xn;
                self.xn_inflight[carrier].extend(packets.into_iter().map(|p| (p, arrival)));
            }
        }
    }

    /// Moves every in-flight packet with `arrival ≤ t` into its SCC buffer, in order.
    pub fn xn_tick(&mut self, t: Slot) {
        for (buf, link) in self.buffers.iter_mut().zip(self.xn_inflight.iter_mut()) {
            while let Some(&(p, arrival)) = link.front() {
                if arrival > t {
                    break;
                }
                link.pop_front();
                buf.push_back(p);
            }
        }
    }

    /// Each carrier hands `min(capacity, occupancy)` head packets to MAC/PHY.
    pub fn serve(&mut self, capacities: &[u32]) -> Vec<Vec<Packet>> {
        self.buffers
            .iter_mut()
            .zip(capacities)
            .map(|(buf, &cap)| {
                let n = (cap as usize).min(buf.len());
                buf.drain(..n).collect()
            })
            .collect()
    }

    /// B(t): PCC occupancy minus the SCC occupancies. Xn in-flight packets are
    /// not visible at the RLC and are excluded.
    pub fn buffer_difference(&self) -> i64 {
        let pcc = self.buffers[0].len() as i64;
        let scc: i64 = self.buffers[1..].iter().map(|b| b.len() as i64).sum();
        pcc - scc
    }

    pub fn total_buffered(&self) -> usize {
        self.buffers.iter().map(VecDeque::len).sum()
    }

    pub fn total_inflight(&self) -> usize {
        self.xn_inflight.iter().map(VecDeque::len).sum()
    }
}

/// Dense set of sequence numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeqSet {
    words: Vec<u64>,
    len: u64,
}

impl SeqSet {
    /// Inserts `seq`; returns `false` if it was already present.
    pub fn insert(&mut self, seq: u64) -> bool {
        let (w, bit) = ((seq / 64) as usize, seq % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let mask = 1u64 << bit;
        if self.words[w] & mask != 0 {
            return false;
        }
        self.words[w] |= mask;
        self.len += 1;
        true
    }

    pub fn contains(&self, seq: u64) -> bool {
        let w = (seq / 64) as usize;
        self.words.get(w).is_some_and(|word| word & (1u64 << (seq % 64)) != 0)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// What the UE has collected so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UeState {
    received: SeqSet,
    per_slot_count: Vec<u32>,
}

impl UeState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one slot's deliveries; returns |Q_U(t)|.
    pub fn receive(&mut self, delivered: &[Vec<Packet>]) -> Result<u32, SimError> {
        let mut count = 0u32;
        for p in delivered.iter().flatten() {
            if !self.received.insert(p.seq) {
                return Err(SimError::DuplicateDelivery { seq: p.seq });
            }
            count += 1;
        }
        self.per_slot_count.push(count);
        Ok(count)
    }

    pub fn total(&self) -> u64 {
        self.received.len()
    }

    pub fn per_slot(&self) -> &[u32] {
        &self.per_slot_count
    }

    pub fn has_received(&self, seq: u64) -> bool {
        self.received.contains(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(ps: &[Packet]) -> Vec<u64> {
        ps.iter().map(|p| p.seq).collect()
    }

    fn queue_1_to_5(n_carriers: usize) -> PdcpState {
        // seqs 0..5 stand for packets 1..5
        let mut s = PdcpState::new(n_carriers);
        s.ingest(5, 0);
        s
    }

    #[test]
    fn burst_ingest() {
        let mut s = PdcpState::new(2);
        s.ingest(100, 0);
        assert_eq!(s.len(), 100);
        assert_eq!(s.n_max() - s.n_min(), 100);
    }

    #[test]
    fn zero_arrivals_is_a_no_op() {
        let mut s = queue_1_to_5(2);
        let before = s.clone();
        s.ingest(0, 3);
        assert_eq!(s, before);
    }

    #[test]
    fn per_slot_ingest_is_additive() {
        let mut s = PdcpState::new(2);
        for t in 0..10 {
            s.ingest(5, t);
        }
        assert_eq!(s.n_max(), 50);
    }

    #[test]
    fn pcc_takes_head_of_line() {
        let mut s = queue_1_to_5(4);
        let d = s.dispatch(SplitAction::PCC, 1);
        assert_eq!(seqs(&d[0]), vec![0]);
        assert_eq!(s.iter().map(|p| p.seq).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(s.n_min(), 1);
        assert_eq!(s.out_count(), &[1, 0, 0, 0]);
    }

    #[test]
    fn scc_group_takes_one_per_scc_in_index_order() {
        let mut s = queue_1_to_5(4);
        let d = s.dispatch(SplitAction::SCC, 1);
        assert!(d[0].is_empty());
        assert_eq!(seqs(&d[1]), vec![0]);
        assert_eq!(seqs(&d[2]), vec![1]);
        assert_eq!(seqs(&d[3]), vec![2]);
    }

    #[test]
    fn scc_group_stops_when_queue_runs_dry() {
        let mut s = PdcpState::new(4);
        s.ingest(1, 0);
        let d = s.dispatch(SplitAction::SCC, 1);
        assert_eq!(seqs(&d[1]), vec![0]);
        assert!(d[2].is_empty() && d[3].is_empty());
    }

    #[test]
    fn quantum_rounds_interleave_carriers() {
        let mut s = PdcpState::new(3);
        s.ingest(10, 0);
        let d = s.dispatch(SplitAction::BOTH, 2);
        assert_eq!(seqs(&d[0]), vec![0, 3]);
        assert_eq!(seqs(&d[1]), vec![1, 4]);
        assert_eq!(seqs(&d[2]), vec![2, 5]);
        assert_eq!(s.out_count(), &[2, 2, 2]);
        let mut s = PdcpState::new(3);
        s.ingest(2, 0);
        let d = s.dispatch(SplitAction::BOTH, 3);
        assert_eq!(d.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 1, 0]);
    }

    #[test]
    fn empty_queue_dispatches_nothing() {
        let mut s = PdcpState::new(3);
        let d = s.dispatch(SplitAction::BOTH, 3);
        assert!(d.iter().all(Vec::is_empty));
    }

    fn one_packet_to_scc(d_xn: Slot) -> (RlcState, Dispatch) {
        let rlc = RlcState::new(2, d_xn);
        let d = vec![vec![], vec![Packet { seq: 9, ingest_slot: 0 }]];
        (rlc, d)
    }

    #[test]
    fn xn_delay_two_slots() {
        let (mut rlc, d) = one_packet_to_scc(2);
        rlc.accept(d, 5);
        for t in 5..7 {
            rlc.xn_tick(t);
            assert_eq!(rlc.occupancy(1), 0, "t={t}");
        }
        rlc.xn_tick(7);
        assert_eq!(rlc.occupancy(1), 1);
    }

    #[test]
    fn xn_zero_delay_lands_same_slot() {
        let (mut rlc, d) = one_packet_to_scc(0);
        rlc.accept(d, 5);
        rlc.xn_tick(5);
        assert_eq!(rlc.occupancy(1), 1);
    }

    #[test]
    fn xn_is_fifo() {
        let mut rlc = RlcState::new(2, 2);
        rlc.accept(vec![vec![], vec![Packet { seq: 1, ingest_slot: 0 }]], 5);
        rlc.accept(vec![vec![], vec![Packet { seq: 2, ingest_slot: 0 }]], 6);
        rlc.xn_tick(7);
        assert_eq!(rlc.buffered(1).map(|p| p.seq).collect::<Vec<_>>(), vec![1]);
        rlc.xn_tick(8);
        assert_eq!(rlc.buffered(1).map(|p| p.seq).collect::<Vec<_>>(), vec![1, 2]);
    }

    fn rlc_with(occ: &[usize]) -> RlcState {
        let mut rlc = RlcState::new(occ.len(), 0);
        let mut seq = 0;
        let d: Dispatch = occ
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        seq += 1;
                        Packet { seq, ingest_slot: 0 }
                    })
                    .collect()
            })
            .collect();
        rlc.accept(d, 0);
        rlc.xn_tick(0);
        rlc
    }

    #[test]
    fn serve_min_rule() {
        let mut rlc = rlc_with(&[5]);
        let out = rlc.serve(&[2]);
        assert_eq!(out[0].len(), 2);
        assert_eq!(rlc.occupancy(0), 3);

        let mut rlc = rlc_with(&[1]);
        assert_eq!(rlc.serve(&[2])[0].len(), 1);

        let mut rlc = rlc_with(&[4]);
        assert!(rlc.serve(&[0])[0].is_empty());
        assert_eq!(rlc.occupancy(0), 4);
    }

    #[test]
    fn buffer_difference_examples() {
        assert_eq!(rlc_with(&[4, 1, 1, 2]).buffer_difference(), 0);
        assert_eq!(rlc_with(&[7, 0, 0]).buffer_difference(), 7);
        assert_eq!(rlc_with(&[0, 3, 3, 3]).buffer_difference(), -9);
    }

    #[test]
    fn ue_counts_and_rejects_duplicates() {
        let mut ue = UeState::new();
        let p = |seq| Packet { seq, ingest_slot: 0 };
        let n = ue.receive(&[vec![p(0), p(1)], vec![p(2)], vec![p(3), p(4)]]).unwrap();
        assert_eq!(n, 5);
        assert_eq!(ue.receive(&[vec![], vec![]]).unwrap(), 0);
        assert_eq!(ue.total(), 5);
        assert_eq!(ue.receive(&[vec![p(1)]]), Err(SimError::DuplicateDelivery { seq: 1 }));
    }

    #[test]
    fn seq_set_basics() {
        let mut s = SeqSet::default();
        assert!(s.insert(1000));
        assert!(!s.insert(1000));
        assert!(s.contains(1000));
        assert!(!s.contains(999));
        assert_eq!(s.len(), 1);
    }
}
