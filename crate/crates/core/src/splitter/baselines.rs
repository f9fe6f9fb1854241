//! Comparison splitters: bandwidth-weighted, delay-based and tabular Q-learning.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::{RngStream, StreamId};

use super::{Observation, SplitAction, Splitter};

/// Bandwidth-weighted allocation.
///
/// The PCC share of slots is BW_P / (BW_P + Σ BW_s), laid out by a
/// largest-remainder (Bresenham) schedule so that every window of slots is within
/// one slot of the target share.
#[derive(Debug, Clone)]
pub struct Bwa {
    share: f64,
}

impl Bwa {
    pub fn new(bw_pcc: f64, bw_scc: &[f64]) -> Self {
        let total = bw_pcc + bw_scc.iter().sum::<f64>();
        let share = if total > 0.0 { bw_pcc / total } else { 0.0 };
        Self { share }
    }

    pub fn share(&self) -> f64 {
        self.share
    }

    /// A_P is set on slot t when the running quota ⌊(t+1)·share⌋ steps up.
    pub fn decide_at(&self, t: u64) -> SplitAction {
        let quota = |n: u64| crate::math::floor(n as f64 * self.share + 1e-9) as u64;
        SplitAction::pcc_if(quota(t + 1) > quota(t))
    }
}

impl Splitter for Bwa {
    fn name(&self) -> &'static str {
        "bwa"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        self.decide_at(obs.t)
    }
}

/// Estimated end-to-end delay per carrier, in slots. Index 0 is the PCC.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEstimate {
    pub per_carrier: Vec<f64>,
}

/// PCC when its delay is no larger than the best SCC delay. Ties go to the PCC.
pub fn ltr_decide(est: &DelayEstimate) -> SplitAction {
    let pcc = est.per_carrier[0];
    let best_scc = est.per_carrier[1..].iter().copied().fold(f64::INFINITY, f64::min);
    SplitAction::pcc_if(pcc <= best_scc)
}

/// Lowest-delay routing driven by locally estimated queueing delay.
///
/// Delay per carrier is the backlog ahead of a new packet divided by the recent
/// service rate; SCCs add their Xn backlog and the Xn delay.
#[derive(Debug, Clone)]
pub struct Ltr {
    /// EWMA of packets served per slot, per carrier.
    rate: Vec<f64>,
    smoothing: f64,
    eps_rate: f64,
}

impl Ltr {
    pub const DEFAULT_SMOOTHING: f64 = 0.1;
    pub const DEFAULT_EPS_RATE: f64 = 1e-3;

    pub fn new(n_carriers: usize, smoothing: f64, eps_rate: f64) -> Self {
        Self {
            rate: vec![0.0; n_carriers],
            smoothing,
            eps_rate,
        }
    }

    pub fn estimate(&mut self, obs: &Observation<'_>) -> DelayEstimate {
        for (r, &served) in self.rate.iter_mut().zip(obs.served_last) {
            *r += self.smoothing * (f64::from(served) - *r);
        }
        let per_carrier = self
            .rate
            .iter()
            .enumerate()
            .map(|(c, &rate)| {
                let backlog = (obs.occupancy[c] + obs.inflight[c]) as f64;
                let xn = if c == 0 { 0.0 } else { obs.d_xn as f64 };
                backlog / rate.max(self.eps_rate) + xn
            })
            .collect();
        DelayEstimate { per_carrier }
    }
}

impl Splitter for Ltr {
    fn name(&self) -> &'static str {
        "ltr"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        let est = self.estimate(obs);
        ltr_decide(&est)
    }
}

/// Hyper-parameters of the Q-learning baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QLearningConfig {
    pub bins: usize,
    pub b_max: f64,
    pub epsilon: f64,
    pub learn_rate: f64,
    pub discount: f64,
}

impl QLearningConfig {
    pub fn with_b_max(b_max: f64) -> Self {
        Self {
            bins: 16,
            b_max,
            epsilon: 0.1,
            learn_rate: 0.1,
            discount: 0.9,
        }
    }
}

/// Q-values over (B bucket, action). Action 0 feeds the PCC, action 1 the SCCs.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub values: Vec<[f64; 2]>,
    pub b_max: f64,
}

impl QTable {
    pub fn new(bins: usize, b_max: f64) -> Self {
        Self {
            values: vec![[0.0; 2]; bins.max(1)],
            b_max,
        }
    }

    /// Uniform bucket of B clamped to [−B_max, B_max].
    pub fn state_of(&self, b: i64) -> usize {
        let bins = self.values.len();
        let x = (b as f64).clamp(-self.b_max, self.b_max);
        let frac = (x + self.b_max) / (2.0 * self.b_max);
        ((frac * bins as f64) as usize).min(bins - 1)
    }

    /// Greedy action index; ties pick the PCC.
    pub fn greedy(&self, state: usize) -> usize {
        let q = self.values[state];
        if q[1] > q[0] {
            1
        } else {
            0
        }
    }

    /// One-step Q-learning update.
    pub fn update(&mut self, s: usize, a: usize, reward: f64, s_next: usize, learn_rate: f64, discount: f64) {
        let best_next = self.values[s_next][0].max(self.values[s_next][1]);
        let q = &mut self.values[s][a];
        *q += learn_rate * (reward + discount * best_next - *q);
    }
}

pub fn action_of(index: usize) -> SplitAction {
    SplitAction::pcc_if(index == 0)
}

/// ε-greedy action from the table.
pub fn qlearn_decide(q: &QTable, b: i64, epsilon: f64, rng: &mut RngStream) -> SplitAction {
    let s = q.state_of(b);
    let a = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..2)
    } else {
        q.greedy(s)
    };
    action_of(a)
}

/// Tabular Q-learning over the buffer difference, rewarded by UE receptions.
#[derive(Debug, Clone)]
pub struct QLearning {
    cfg: QLearningConfig,
    table: QTable,
    rng: RngStream,
    last: Option<(usize, usize)>,
}

impl QLearning {
    pub fn new(cfg: QLearningConfig, seed: u64) -> Self {
        Self {
            table: QTable::new(cfg.bins, cfg.b_max),
            rng: RngStream::new(seed, StreamId::POLICY),
            cfg,
            last: None,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }
}

impl Splitter for QLearning {
    fn name(&self) -> &'static str {
        "qlearning"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        let s = self.table.state_of(obs.b);
        if let Some((ps, pa)) = self.last {
            self.table.update(
                ps,
                pa,
                f64::from(obs.received_last),
                s,
                self.cfg.learn_rate,
                self.cfg.discount,
            );
        }
        let action = qlearn_decide(&self.table, obs.b, self.cfg.epsilon, &mut self.rng);
        self.last = Some((s, usize::from(!action.a_p)));
        action
    }
}
