//! Per-slot fading, path loss, SINR and the two-level MAC capacity abstraction.

use alloc::vec::Vec;

use rand_distr::{Distribution, Gamma, LogNormal};

use crate::clock::Slot;
use crate::error::SimError;
use crate::math;
use crate::rng::{RngStream, StreamId};

/// Which component carrier a configuration describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CarrierKind {
    Pcc,
    /// 1-based SCC index.
    Scc(usize),
}

impl CarrierKind {
    pub fn stream_id(self) -> StreamId {
        match self {
            CarrierKind::Pcc => StreamId::PCC,
            CarrierKind::Scc(s) => StreamId::scc(s),
        }
    }
}

/// Positive unit-mean distribution used for the fading coefficient.
///
/// Both families are parameterised by moment matching to mean 1 and variance σ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FadingFamily {
    /// Gamma(shape = 1/σ², scale = σ²).
    #[default]
    Gamma,
    /// LogNormal with σ_ln² = ln(1 + σ²), μ = −σ_ln²/2.
    LogNormal,
}

/// Reference offset folded into the UMa-style loss so that `h` is normalised
/// (antenna gains and the noise floor are absorbed here).
pub const DEFAULT_REFERENCE_DB: f64 = 94.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum PathLossModel {
    /// PL_dB = 32.4 + 30·log10(d_m) + 20·log10(f_GHz) − reference_db.
    UmaNlos { reference_db: f64 },
    /// Distance-independent loss, for oracle runs and unit tests.
    Fixed { pl_db: f64 },
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel::UmaNlos {
            reference_db: DEFAULT_REFERENCE_DB,
        }
    }
}

impl PathLossModel {
    /// Path loss in dB. Distances below 1 m are outside the model.
    pub fn loss_db(&self, distance_m: f64, frequency_ghz: f64) -> Result<f64, SimError> {
        if !(distance_m >= 1.0) {
            return Err(SimError::DistanceOutOfRange(distance_m));
        }
        Ok(match *self {
            PathLossModel::UmaNlos { reference_db } => {
                32.4 + 30.0 * math::log10(distance_m) + 20.0 * math::log10(frequency_ghz) - reference_db
            }
            PathLossModel::Fixed { pl_db } => pl_db,
        })
    }
}

/// Radio parameters of one component carrier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarrierConfig {
    pub kind: CarrierKind,
    pub frequency_ghz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    /// Normalisation factor ρ (bandwidth, payload and slot length folded together).
    pub rho: f64,
    /// Fading variance σ².
    pub sigma2: f64,
    /// Delivery threshold N_th.
    pub n_th: f64,
    pub fading: FadingFamily,
    pub path_loss: PathLossModel,
}

pub const DEFAULT_N_TH: f64 = 2.0;
pub const DEFAULT_RHO_PCC: f64 = 2.0;
pub const DEFAULT_RHO_SCC: f64 = 1.0;

impl CarrierConfig {
    /// Sub-6 GHz anchor carrier with the reference radio parameters
    /// (4.9 GHz, 100 MHz, 28 dBm, σ² = 0.0004).
    pub fn default_pcc() -> Self {
        Self {
            kind: CarrierKind::Pcc,
            frequency_ghz: 4.9,
            bandwidth_mhz: 100.0,
            tx_power_dbm: 28.0,
            rho: DEFAULT_RHO_PCC,
            sigma2: 0.0004,
            n_th: DEFAULT_N_TH,
            fading: FadingFamily::Gamma,
            path_loss: PathLossModel::default(),
        }
    }

    /// mmWave secondary carrier (28 GHz, 100 MHz, 35 dBm, σ² = 0.27).
    pub fn default_scc(index: usize) -> Self {
        Self {
            kind: CarrierKind::Scc(index),
            frequency_ghz: 28.0,
            bandwidth_mhz: 100.0,
            tx_power_dbm: 35.0,
            rho: DEFAULT_RHO_SCC,
            sigma2: 0.27,
            n_th: DEFAULT_N_TH,
            fading: FadingFamily::Gamma,
            path_loss: PathLossModel::default(),
        }
    }

    /// A carrier whose SINR never changes: no fading, fixed loss.
    pub fn flat(kind: CarrierKind, rho: f64, pl_db: f64) -> Self {
        let mut c = match kind {
            CarrierKind::Pcc => Self::default_pcc(),
            CarrierKind::Scc(s) => Self::default_scc(s),
        };
        c.rho = rho;
        c.sigma2 = 0.0;
        c.path_loss = PathLossModel::Fixed { pl_db };
        c
    }
}

/// Draws one fading coefficient with mean 1 and variance σ².
pub fn sample_fading(cfg: &CarrierConfig, rng: &mut RngStream) -> f64 {
    let var = cfg.sigma2;
    if var <= 0.0 {
        return 1.0;
    }
    match cfg.fading {
        FadingFamily::Gamma => {
            // shape·scale = 1, shape·scale² = σ²
            let g = Gamma::new(1.0 / var, var).expect("positive gamma parameters");
            g.sample(rng)
        }
        FadingFamily::LogNormal => {
            let s2 = math::ln(1.0 + var);
            let ln = LogNormal::new(-s2 / 2.0, math::sqrt(s2)).expect("finite lognormal parameters");
            ln.sample(rng)
        }
    }
}

/// Normalised linear path loss `h = 10^(PL_dB/10)`.
pub fn path_loss(distance_m: f64, frequency_ghz: f64, model: &PathLossModel) -> Result<f64, SimError> {
    Ok(math::db_to_linear(model.loss_db(distance_m, frequency_ghz)?))
}

/// γ = PT − 10·log10(h·α), in dB.
pub fn sinr_db(cfg: &CarrierConfig, h: f64, alpha: f64) -> f64 {
    cfg.tx_power_dbm - math::linear_to_db(h * alpha)
}

/// Whether a carrier with reference factor `rho_s` clears the delivery threshold.
#[inline]
fn clears_threshold(rho_s: f64, n_th: f64, gamma_db: f64) -> bool {
    let gamma_lin = math::db_to_linear(gamma_db);
    rho_s * math::log2(1.0 + gamma_lin) >= n_th
}

/// Packets the carrier can hand to the UE this slot.
///
/// `rho_s` is the SCC normalisation factor that the PCC rate is expressed in.
/// The SINR is converted from dB to linear before the Shannon term.
pub fn mac_capacity(cfg: &CarrierConfig, rho_s: f64, gamma_db: f64) -> u32 {
    if !clears_threshold(rho_s, cfg.n_th, gamma_db) {
        return 0;
    }
    match cfg.kind {
        CarrierKind::Pcc => nominal_pcc_capacity(cfg.rho, rho_s),
        CarrierKind::Scc(_) => 1,
    }
}

/// ⌊ρ_P/ρ_s⌋.
pub fn nominal_pcc_capacity(rho_p: f64, rho_s: f64) -> u32 {
    math::floor(rho_p / rho_s) as u32
}

/// Sampled radio state of one carrier for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierSample {
    pub alpha: f64,
    pub h: f64,
    pub gamma_db: f64,
    pub capacity: u32,
}

/// Radio state of all carriers for one slot. Index 0 is the PCC, `s` is SCC `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub distance_p: f64,
    pub distance_s: f64,
    pub carriers: Vec<CarrierSample>,
}

impl ChannelState {
    pub fn capacities(&self) -> impl Iterator<Item = u32> + '_ {
        self.carriers.iter().map(|c| c.capacity)
    }
}

/// Fading channel for all carriers of a run, one RNG stream per carrier.
#[derive(Debug, Clone)]
pub struct RadioChannel {
    carriers: Vec<CarrierConfig>,
    streams: Vec<RngStream>,
    rho_s: f64,
}

impl RadioChannel {
    /// `carriers[0]` must be the PCC, followed by the SCCs in index order.
    pub fn new(carriers: Vec<CarrierConfig>, rho_s: f64, seed: u64) -> Self {
        let streams = carriers
            .iter()
            .map(|c| RngStream::new(seed, c.kind.stream_id()))
            .collect();
        Self {
            carriers,
            streams,
            rho_s,
        }
    }

    pub fn carriers(&self) -> &[CarrierConfig] {
        &self.carriers
    }

    pub fn sample(&mut self, distance_p: f64, distance_s: f64) -> Result<ChannelState, SimError> {
        let mut out = Vec::with_capacity(self.carriers.len());
        for (cfg, rng) in self.carriers.iter().zip(self.streams.iter_mut()) {
            let d = match cfg.kind {
                CarrierKind::Pcc => distance_p,
                CarrierKind::Scc(_) => distance_s,
            };
            let alpha = sample_fading(cfg, rng);
            let h = path_loss(d, cfg.frequency_ghz, &cfg.path_loss)?;
            let gamma_db = sinr_db(cfg, h, alpha);
            let capacity = mac_capacity(cfg, self.rho_s, gamma_db);
            out.push(CarrierSample {
                alpha,
                h,
                gamma_db,
                capacity,
            });
        }
        Ok(ChannelState {
            distance_p,
            distance_s,
            carriers: out,
        })
    }
}

/// Capacities given directly per slot; used by the oracle and deterministic tests.
///
/// `per_slot[t][c]` is carrier `c`'s capacity in slot `t`. Past the end of the
/// script the last row repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedCapacity {
    pub per_slot: Vec<Vec<u32>>,
}

impl ScriptedCapacity {
    pub fn constant(capacities: Vec<u32>) -> Self {
        Self {
            per_slot: alloc::vec![capacities],
        }
    }

    pub fn at(&self, t: Slot) -> &[u32] {
        let last = self.per_slot.len() - 1;
        &self.per_slot[(t as usize).min(last)]
    }

    pub fn sample(&self, t: Slot) -> ChannelState {
        ChannelState {
            distance_p: 1.0,
            distance_s: 1.0,
            carriers: self
                .at(t)
                .iter()
                .map(|&capacity| CarrierSample {
                    alpha: 1.0,
                    h: 1.0,
                    gamma_db: 0.0,
                    capacity,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn moments(cfg: &CarrierConfig, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngStream::new(seed, StreamId::PCC);
        let xs: Vec<f64> = (0..n).map(|_| sample_fading(cfg, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_variance_is_exactly_one() {
        let mut cfg = CarrierConfig::default_scc(1);
        cfg.sigma2 = 0.0;
        let mut rng = RngStream::new(1, StreamId::scc(1));
        for _ in 0..100 {
            assert_eq!(sample_fading(&cfg, &mut rng), 1.0);
        }
    }

    #[test]
    fn pcc_fading_moments() {
        let cfg = CarrierConfig::default_pcc();
        let (m, v) = moments(&cfg, 100_000, 11);
        assert!((0.995..=1.005).contains(&m), "mean {m}");
        assert!((0.00036..=0.00044).contains(&v), "var {v}");
    }

    #[test]
    fn scc_fading_moments() {
        let cfg = CarrierConfig::default_scc(1);
        let (m, v) = moments(&cfg, 100_000, 12);
        assert!((0.99..=1.01).contains(&m), "mean {m}");
        assert!((0.25..=0.29).contains(&v), "var {v}");
    }

    #[test]
    fn lognormal_family_is_moment_matched() {
        let mut cfg = CarrierConfig::default_scc(1);
        cfg.fading = FadingFamily::LogNormal;
        let (m, v) = moments(&cfg, 100_000, 13);
        assert!((0.99..=1.01).contains(&m), "mean {m}");
        assert!((0.25..=0.29).contains(&v), "var {v}");
    }

    #[test]
    fn fixed_zero_loss_is_unity() {
        let h = path_loss(50.0, 28.0, &PathLossModel::Fixed { pl_db: 0.0 }).unwrap();
        assert_eq!(h, 1.0);
    }

    #[test]
    fn uma_loss_grows_with_distance() {
        let m = PathLossModel::default();
        assert!(path_loss(200.0, 28.0, &m).unwrap() > path_loss(100.0, 28.0, &m).unwrap());
    }

    #[test]
    fn uma_loss_regression_values() {
        // 32.4 + 30·log10(100) + 20·log10(f): 106.2039 dB at 4.9 GHz, 121.3432 dB at 28 GHz
        let raw = PathLossModel::UmaNlos { reference_db: 0.0 };
        assert_abs_diff_eq!(raw.loss_db(100.0, 4.9).unwrap(), 106.203_921_6, epsilon = 1e-6);
        assert_abs_diff_eq!(raw.loss_db(100.0, 28.0).unwrap(), 121.343_160_6, epsilon = 1e-6);
        let norm = PathLossModel::default();
        assert_abs_diff_eq!(
            norm.loss_db(100.0, 28.0).unwrap(),
            121.343_160_6 - DEFAULT_REFERENCE_DB,
            epsilon = 1e-6
        );
    }

    #[test]
    fn sub_metre_distance_rejected() {
        let m = PathLossModel::default();
        assert_eq!(path_loss(0.5, 28.0, &m), Err(SimError::DistanceOutOfRange(0.5)));
    }

    #[test]
    fn sinr_arithmetic() {
        let mut cfg = CarrierConfig::default_pcc();
        assert_eq!(sinr_db(&cfg, 1.0, 1.0), 28.0);
        cfg.tx_power_dbm = 35.0;
        assert_abs_diff_eq!(sinr_db(&cfg, 10.0, 1.0), 25.0, epsilon = 1e-12);
        cfg.tx_power_dbm = 28.0;
        assert_abs_diff_eq!(sinr_db(&cfg, 1000.0, 2.0), -5.010_299_956_6, epsilon = 1e-9);
    }

    #[test]
    fn scc_threshold_boundary() {
        let cfg = CarrierConfig::default_scc(1);
        // γ_lin = 3 gives log2(4) = 2 = N_th
        let at = math::linear_to_db(3.0);
        assert_eq!(mac_capacity(&cfg, 1.0, at + 1e-12), 1);
        let below = math::linear_to_db(2.0);
        assert_eq!(mac_capacity(&cfg, 1.0, below), 0);
    }

    #[test]
    fn pcc_capacity_is_rho_ratio() {
        let cfg = CarrierConfig::default_pcc();
        assert_eq!(mac_capacity(&cfg, 1.0, 30.0), 2);
        assert_eq!(mac_capacity(&cfg, 1.0, -30.0), 0);
    }

    #[test]
    fn capacity_is_a_two_level_step() {
        let cfg = CarrierConfig::default_pcc();
        let mut prev = 0;
        let mut levels = alloc::collections::BTreeSet::new();
        for i in -400..400 {
            let c = mac_capacity(&cfg, 1.0, i as f64 * 0.1);
            assert!(c >= prev);
            prev = c;
            levels.insert(c);
        }
        assert_eq!(levels.len(), 2);
    }

    #[test]
    fn flat_channel_is_constant() {
        let carriers = alloc::vec![
            CarrierConfig::flat(CarrierKind::Pcc, 2.0, 0.0),
            CarrierConfig::flat(CarrierKind::Scc(1), 1.0, 0.0),
        ];
        let mut ch = RadioChannel::new(carriers, 1.0, 3);
        let first = ch.sample(100.0, 100.0).unwrap();
        for _ in 0..50 {
            assert_eq!(ch.sample(100.0, 100.0).unwrap(), first);
        }
        assert_eq!(first.capacities().collect::<Vec<_>>(), alloc::vec![2, 1]);
    }
}
