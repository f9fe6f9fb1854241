//! Fuzzy-gain-scheduled incremental PID splitter.
//!
//! Stage 1 (t′ ≤ N) feeds every carrier. Afterwards the controller watches the
//! sign of the buffer difference B: while B keeps its sign the previous action
//! is held, otherwise a new action is scheduled from the recent split ratio k
//! and the PID increment G. Gains are retuned by three 2×2 fuzzy rule tables at
//! window boundaries.

use alloc::collections::VecDeque;

use crate::math;

use super::{ControllerSnapshot, Observation, SplitAction, Splitter};

/// PID coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
}

impl PidGains {
    pub const fn new(k_p: f64, k_i: f64, k_d: f64) -> Self {
        Self { k_p, k_i, k_d }
    }

    fn clamp(self, lo: f64, hi: f64) -> Self {
        Self {
            k_p: self.k_p.clamp(lo, hi),
            k_i: self.k_i.clamp(lo, hi),
            k_d: self.k_d.clamp(lo, hi),
        }
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::new(0.5, 0.2, 0.1)
    }
}

/// A 2×2 rule table. Row 0 is weighted by D_B, row 1 by 1 − D_B.
pub type RuleTable = [[f64; 2]; 2];

/// Fuzzifier and rule-table settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FuzzyConfig {
    /// Normaliser for B and its change.
    pub b_max: f64,
    pub t_p: RuleTable,
    pub t_i: RuleTable,
    pub t_d: RuleTable,
    /// Half-width of the triangular membership function (peak 1 at 0).
    pub membership_width: f64,
}

impl FuzzyConfig {
    pub const DEFAULT_T_P: RuleTable = [[0.3, 0.1], [-0.1, -0.3]];
    pub const DEFAULT_T_I: RuleTable = [[0.06, 0.02], [-0.02, -0.06]];
    pub const DEFAULT_T_D: RuleTable = [[0.1, 0.03], [-0.03, -0.1]];

    pub fn with_b_max(b_max: f64) -> Self {
        Self {
            b_max,
            t_p: Self::DEFAULT_T_P,
            t_i: Self::DEFAULT_T_I,
            t_d: Self::DEFAULT_T_D,
            membership_width: 1.0,
        }
    }
}

/// Where the second impulse train of a window starts counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ImpulseAnchor {
    /// PCC impulses at multiples of k + 1 counted from the window start.
    #[default]
    Window,
    /// Multiples of k + 1 counted from the end of the first segment (G·k).
    FirstSegmentEnd,
}

/// When the controller skips re-planning, and what it emits instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HoldRule {
    /// Repeat the previous action whenever B keeps its sign.
    Literal,
    /// Repeat the previous action while B keeps its sign and |B| is not growing.
    Action,
    /// Same guard as `Action`, but keep the previous (k, G) and continue its
    /// impulse train.
    #[default]
    Schedule,
}

/// Full controller configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FuzzyPidConfig {
    /// Prediction horizon and window length N, in slots.
    pub horizon: u32,
    pub initial_gains: PidGains,
    pub gain_min: f64,
    pub gain_max: f64,
    pub fuzzy: FuzzyConfig,
    /// `false` freezes the gains at `initial_gains` (the plain PID baseline).
    pub adapt_gains: bool,
    pub anchor: ImpulseAnchor,
    pub hold: HoldRule,
}

pub const DEFAULT_HORIZON: u32 = 16;

impl FuzzyPidConfig {
    /// Defaults for a carrier set with the given PCC capacity ⌊ρ_P/ρ_s⌋ and SCC count.
    pub fn for_carriers(horizon: u32, pcc_capacity: u32, n_scc: usize) -> Self {
        Self {
            horizon,
            initial_gains: PidGains::default(),
            gain_min: 0.0,
            gain_max: 5.0,
            fuzzy: FuzzyConfig::with_b_max(default_b_max(horizon, pcc_capacity, n_scc)),
            adapt_gains: true,
            anchor: ImpulseAnchor::Window,
            hold: HoldRule::Schedule,
        }
    }

    pub fn without_fuzzy(mut self) -> Self {
        self.adapt_gains = false;
        self
    }
}

/// 2·N·max(⌊ρ_P/ρ_s⌋, N_SCC).
pub fn default_b_max(horizon: u32, pcc_capacity: u32, n_scc: usize) -> f64 {
    2.0 * f64::from(horizon) * f64::from(pcc_capacity.max(n_scc as u32))
}

/// Split ratio over the action history: ⌊Σ_s Σ_n A_s / max(1, Σ_n A_P)⌋, at least 1.
///
/// The group bit counts once per SCC.
pub fn compute_k<'a>(history: impl IntoIterator<Item = &'a SplitAction>, n_scc: usize) -> u32 {
    let (mut pcc, mut scc) = (0u64, 0u64);
    for a in history {
        pcc += u64::from(a.a_p);
        scc += u64::from(a.a_s) * n_scc as u64;
    }
    ((scc / pcc.max(1)) as u32).max(1)
}

/// Second-order incremental PID output for the error samples
/// `(e(t′), e(t′−1), e(t′−2))`.
pub fn pid_increment(gains: PidGains, e: (f64, f64, f64)) -> f64 {
    let (e0, e1, e2) = e;
    gains.k_p * (e0 - e1) + gains.k_i * e0 + gains.k_d * (e0 - 2.0 * e1 + e2)
}

/// Impulse count used by the schedule: round(G) clamped to `[0, ⌊(N−1)/k⌋]`.
pub fn impulse_count(g: f64, horizon: u32, k: u32) -> u32 {
    let cap = (horizon.saturating_sub(1)) / k.max(1);
    let r = math::round(g);
    if !(r > 0.0) {
        0
    } else if r >= f64::from(cap) {
        cap
    } else {
        r as u32
    }
}

/// Impulse-train action for slot `t`.
///
/// With r = t mod N: the first segment (r ≤ G·k) has PCC impulses at r = i·k,
/// i ∈ [1, G]; the rest of the window has PCC impulses at multiples of k + 1.
pub fn schedule_action(t: u64, horizon: u32, k: u32, g: f64, anchor: ImpulseAnchor) -> SplitAction {
    let k = k.max(1);
    let n = horizon.max(1);
    let g_int = impulse_count(g, n, k);
    let r = (t % u64::from(n)) as u32;
    let first_end = g_int * k;
    let a_p = if r <= first_end {
        r >= k && r % k == 0
    } else {
        let offset = match anchor {
            ImpulseAnchor::Window => r,
            ImpulseAnchor::FirstSegmentEnd => r - first_end,
        };
        offset >= k + 1 && offset % (k + 1) == 0
    };
    SplitAction::pcc_if(a_p)
}

/// Triangular membership, 1 at the origin and 0 beyond ±width.
pub fn membership(x: f64, width: f64) -> f64 {
    (1.0 - x.abs() / width).max(0.0)
}

/// Membership degrees (D_B, D_E) of the normalised buffer difference and its change.
pub fn fuzzify(b: i64, b_prev: i64, cfg: &FuzzyConfig) -> (f64, f64) {
    let nb = (b as f64 / cfg.b_max).clamp(-1.0, 1.0);
    let ne = ((b - b_prev) as f64 / (2.0 * cfg.b_max)).clamp(-1.0, 1.0);
    (
        membership(nb, cfg.membership_width),
        membership(ne, cfg.membership_width),
    )
}

/// ΔK = [D_B, 1−D_B] · T · Mid · [D_E, 1−D_E]ᵀ, with Mid the outer product of
/// the two membership pairs.
pub fn rule_increment(table: &RuleTable, d_b: f64, d_e: f64) -> f64 {
    let row = [d_b, 1.0 - d_b];
    let col = [d_e, 1.0 - d_e];
    let mid = [[row[0] * col[0], row[0] * col[1]], [row[1] * col[0], row[1] * col[1]]];
    // row · T
    let rt = [
        row[0] * table[0][0] + row[1] * table[1][0],
        row[0] * table[0][1] + row[1] * table[1][1],
    ];
    // (row · T) · Mid
    let rtm = [
        rt[0] * mid[0][0] + rt[1] * mid[1][0],
        rt[0] * mid[0][1] + rt[1] * mid[1][1],
    ];
    rtm[0] * col[0] + rtm[1] * col[1]
}

/// Applies one fuzzy retuning step and clamps the result to `[lo, hi]`.
pub fn update_gains(gains: PidGains, d_b: f64, d_e: f64, cfg: &FuzzyConfig, lo: f64, hi: f64) -> PidGains {
    PidGains {
        k_p: gains.k_p + rule_increment(&cfg.t_p, d_b, d_e),
        k_i: gains.k_i + rule_increment(&cfg.t_i, d_b, d_e),
        k_d: gains.k_d + rule_increment(&cfg.t_d, d_b, d_e),
    }
    .clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Adapt,
}

/// Mutable controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// The last N emitted actions, newest at the back.
    pub action_history: VecDeque<SplitAction>,
    /// B(t′), B(t′−1), B(t′−2).
    pub b_history: [i64; 3],
    pub gains: PidGains,
    pub g: f64,
    pub k: u32,
    pub stage: Stage,
    /// Whether the last decision took the dynamic-mode path.
    pub dynamic: bool,
    /// Last action emitted in the adaptation stage.
    pub last_adapt_action: Option<SplitAction>,
}

/// The proposed controller. With `adapt_gains = false` it is the fixed-gain PID baseline.
#[derive(Debug, Clone)]
pub struct FuzzyPid {
    cfg: FuzzyPidConfig,
    n_scc: usize,
    state: ControllerState,
}

impl FuzzyPid {
    pub fn new(cfg: FuzzyPidConfig, n_scc: usize) -> Self {
        Self {
            state: ControllerState {
                action_history: VecDeque::with_capacity(cfg.horizon as usize + 1),
                b_history: [0; 3],
                gains: cfg.initial_gains,
                g: 0.0,
                k: 1,
                stage: Stage::Init,
                dynamic: false,
                last_adapt_action: None,
            },
            cfg,
            n_scc,
        }
    }

    pub fn config(&self) -> &FuzzyPidConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn n_scc(&self) -> usize {
        self.n_scc
    }

    /// One decision for slot `t` given the current buffer difference.
    pub fn step(&mut self, t: u64, b_now: i64) -> SplitAction {
        let n = u64::from(self.cfg.horizon);
        let st = &mut self.state;
        st.b_history = [b_now, st.b_history[0], st.b_history[1]];
        let [b0, b1, b2] = st.b_history;

        let action = if t <= n {
            st.stage = Stage::Init;
            st.dynamic = false;
            SplitAction::BOTH
        } else {
            st.stage = Stage::Adapt;
            let same_sign = b0 * b1 > 0;
            let hold = st.last_adapt_action.filter(|_| match self.cfg.hold {
                HoldRule::Literal => same_sign,
                HoldRule::Action | HoldRule::Schedule => same_sign && b0.abs() <= b1.abs(),
            });
            match hold {
                Some(prev) => {
                    st.dynamic = false;
                    match self.cfg.hold {
                        HoldRule::Literal | HoldRule::Action => prev,
                        HoldRule::Schedule => schedule_action(t, self.cfg.horizon, st.k, st.g, self.cfg.anchor),
                    }
                }
                None => {
                    st.dynamic = true;
                    if self.cfg.adapt_gains && t % n == 0 {
                        let (d_b, d_e) = fuzzify(b0, b1, &self.cfg.fuzzy);
                        st.gains = update_gains(
                            st.gains,
                            d_b,
                            d_e,
                            &self.cfg.fuzzy,
                            self.cfg.gain_min,
                            self.cfg.gain_max,
                        );
                    }
                    // The controlled error is −B: a PCC surplus calls for fewer PCC impulses.
                    let e = (-(b0 as f64), -(b1 as f64), -(b2 as f64));
                    st.g = pid_increment(st.gains, e);
                    st.k = compute_k(st.action_history.iter(), 1);
                    schedule_action(t, self.cfg.horizon, st.k, st.g, self.cfg.anchor)
                }
            }
        };

        if st.action_history.len() == self.cfg.horizon as usize {
            st.action_history.pop_front();
        }
        st.action_history.push_back(action);
        if st.stage == Stage::Adapt {
            st.last_adapt_action = Some(action);
        }
        action
    }
}

impl Splitter for FuzzyPid {
    fn name(&self) -> &'static str {
        if self.cfg.adapt_gains {
            "fuzzy_pid"
        } else {
            "nofuzzy_pid"
        }
    }

    fn decide(&mut self, obs: &Observation<'_>) -> SplitAction {
        self.step(obs.t, obs.b)
    }

    fn snapshot(&self) -> ControllerSnapshot {
        ControllerSnapshot {
            gains: Some(self.state.gains),
            g: Some(self.state.g),
            k: Some(self.state.k),
            dynamic: self.state.dynamic,
        }
    }
}
