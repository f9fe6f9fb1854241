//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[workload]`,
//! `[carriers.pcc]`, `[carriers.sccN]`, `[channel]`, `[controller]`,
//! `[trajectory]` and `[run]`. Every key is optional except the carrier tables
//! themselves; omitted keys take the static-scenario defaults.

use std::collections::BTreeMap;
use std::path::Path;

use casplit_core::channel::{CarrierConfig, CarrierKind, FadingFamily, PathLossModel};
use casplit_core::scenario::{ControllerConfig, LtrConfig, QLearningParams};
use casplit_core::splitter::fuzzy_pid::{HoldRule, ImpulseAnchor, RuleTable};
use casplit_core::splitter::PidGains;
use casplit_core::{ArrivalMode, PolicyKind, ScenarioConfig, SimError, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig { field, reason } => ConfigError::Field { field, reason },
            other => ConfigError::Parse(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    Burst,
    PerSlot,
    Saturated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub packets: Option<u64>,
    pub arrival: Option<ArrivalKind>,
    /// Packets per slot for `arrival = "per_slot"`.
    pub rate: Option<u64>,
    pub dispatch_quantum: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    pub frequency_ghz: Option<f64>,
    pub bandwidth_mhz: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub rho: Option<f64>,
    pub sigma2: Option<f64>,
    pub n_th: Option<f64>,
    pub fading: Option<FadingFamily>,
    pub path_loss: Option<PathLossModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub d_xn: Option<u64>,
    pub secondary_offset_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub policy: Option<PolicyKind>,
    pub horizon: Option<u32>,
    pub b_max: Option<f64>,
    pub initial_gains: Option<PidGains>,
    pub gain_min: Option<f64>,
    pub gain_max: Option<f64>,
    pub t_p: Option<RuleTable>,
    pub t_i: Option<RuleTable>,
    pub t_d: Option<RuleTable>,
    pub membership_width: Option<f64>,
    pub anchor: Option<ImpulseAnchor>,
    pub hold: Option<HoldRule>,
    pub ltr: Option<LtrConfig>,
    pub qlearning: Option<QLearningParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    OutAndBack,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: Option<TrajectoryKind>,
    pub distance_m: Option<f64>,
    pub start_m: Option<f64>,
    pub speed_mps: Option<f64>,
    pub turn_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub max_slots: Option<u64>,
    pub seed: Option<u64>,
    pub slot_duration_s: Option<f64>,
}

/// The on-disk layout of a scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub workload: WorkloadSection,
    pub carriers: Option<BTreeMap<String, CarrierSection>>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub run: RunSection,
}

fn carrier_config(kind: CarrierKind, s: &CarrierSection) -> CarrierConfig {
    let mut c = match kind {
        CarrierKind::Pcc => CarrierConfig::default_pcc(),
        CarrierKind::Scc(i) => CarrierConfig::default_scc(i),
    };
    c.frequency_ghz = s.frequency_ghz.unwrap_or(c.frequency_ghz);
    c.bandwidth_mhz = s.bandwidth_mhz.unwrap_or(c.bandwidth_mhz);
    c.tx_power_dbm = s.tx_power_dbm.unwrap_or(c.tx_power_dbm);
    c.rho = s.rho.unwrap_or(c.rho);
    c.sigma2 = s.sigma2.unwrap_or(c.sigma2);
    c.n_th = s.n_th.unwrap_or(c.n_th);
    c.fading = s.fading.unwrap_or(c.fading);
    c.path_loss = s.path_loss.unwrap_or(c.path_loss);
    c
}

fn carrier_section(c: &CarrierConfig) -> CarrierSection {
    CarrierSection {
        frequency_ghz: Some(c.frequency_ghz),
        bandwidth_mhz: Some(c.bandwidth_mhz),
        tx_power_dbm: Some(c.tx_power_dbm),
        rho: Some(c.rho),
        sigma2: Some(c.sigma2),
        n_th: Some(c.n_th),
        fading: Some(c.fading),
        path_loss: Some(c.path_loss),
    }
}

impl ConfigFile {
    /// Resolves defaults and validates the result.
    pub fn into_scenario(self) -> Result<ScenarioConfig, ConfigError> {
        let carriers = self.carriers.ok_or_else(|| {
            ConfigError::field("carriers", "missing section; need [carriers.pcc] and [carriers.scc1]")
        })?;
        let pcc = carriers
            .get("pcc")
            .ok_or_else(|| ConfigError::field("carriers.pcc", "missing section"))?;
        let mut n_scc = 0;
        for key in carriers.keys().filter(|k| *k != "pcc") {
            let index = key
                .strip_prefix("scc")
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|&i| i >= 1)
                .ok_or_else(|| ConfigError::field(format!("carriers.{key}"), "expected pcc or scc1, scc2, ..."))?;
            n_scc = n_scc.max(index);
        }
        if n_scc == 0 {
            return Err(ConfigError::field("carriers.scc1", "missing section"));
        }
        let mut list = vec![carrier_config(CarrierKind::Pcc, pcc)];
        for i in 1..=n_scc {
            let s = carriers
                .get(&format!("scc{i}"))
                .ok_or_else(|| ConfigError::field(format!("carriers.scc{i}"), "missing section"))?;
            list.push(carrier_config(CarrierKind::Scc(i), s));
        }

        let mut cfg = ScenarioConfig::static_default(n_scc);
        cfg.carriers = list;

        let w = &self.workload;
        cfg.packets = w.packets.unwrap_or(cfg.packets);
        cfg.dispatch_quantum = w.dispatch_quantum.or(cfg.dispatch_quantum);
        cfg.arrival = match (w.arrival.unwrap_or(ArrivalKind::Burst), w.rate) {
            (ArrivalKind::Burst, None) => ArrivalMode::Burst,
            (ArrivalKind::Saturated, None) => ArrivalMode::Saturated,
            (ArrivalKind::PerSlot, Some(rate)) => ArrivalMode::PerSlot { rate },
            (ArrivalKind::PerSlot, None) => {
                return Err(ConfigError::field(
                    "workload.rate",
                    "required when arrival = \"per_slot\"",
                ))
            }
            (_, Some(_)) => {
                return Err(ConfigError::field(
                    "workload.rate",
                    "only valid with arrival = \"per_slot\"",
                ))
            }
        };

        cfg.d_xn = self.channel.d_xn.unwrap_or(cfg.d_xn);
        cfg.secondary_offset_m = self.channel.secondary_offset_m.unwrap_or(cfg.secondary_offset_m);

        let c = &self.controller;
        let d = ControllerConfig::default();
        cfg.policy = c.policy.unwrap_or_default();
        cfg.controller = ControllerConfig {
            horizon: c.horizon.unwrap_or(d.horizon),
            b_max: c.b_max.or(d.b_max),
            initial_gains: c.initial_gains.unwrap_or(d.initial_gains),
            gain_min: c.gain_min.unwrap_or(d.gain_min),
            gain_max: c.gain_max.unwrap_or(d.gain_max),
            t_p: c.t_p.unwrap_or(d.t_p),
            t_i: c.t_i.unwrap_or(d.t_i),
            t_d: c.t_d.unwrap_or(d.t_d),
            membership_width: c.membership_width.unwrap_or(d.membership_width),
            anchor: c.anchor.unwrap_or(d.anchor),
            hold: c.hold.unwrap_or(d.hold),
        };
        cfg.ltr = c.ltr.unwrap_or_default();
        cfg.qlearning = c.qlearning.unwrap_or_default();

        let t = &self.trajectory;
        cfg.trajectory = match t.kind.unwrap_or(TrajectoryKind::Static) {
            TrajectoryKind::Static => {
                for (name, v) in [
                    ("start_m", t.start_m),
                    ("speed_mps", t.speed_mps),
                    ("turn_time_s", t.turn_time_s),
                ] {
                    if v.is_some() {
                        return Err(ConfigError::field(
                            format!("trajectory.{name}"),
                            "only valid with kind = \"out_and_back\"",
                        ));
                    }
                }
                Trajectory::Static {
                    distance_m: t.distance_m.unwrap_or(100.0),
                }
            }
            TrajectoryKind::OutAndBack => {
                if t.distance_m.is_some() {
                    return Err(ConfigError::field(
                        "trajectory.distance_m",
                        "only valid with kind = \"static\"",
                    ));
                }
                let Trajectory::OutAndBack {
                    start_m,
                    speed_mps,
                    turn_time_s,
                } = Trajectory::mobile_default()
                else {
                    unreachable!()
                };
                Trajectory::OutAndBack {
                    start_m: t.start_m.unwrap_or(start_m),
                    speed_mps: t.speed_mps.unwrap_or(speed_mps),
                    turn_time_s: t.turn_time_s.unwrap_or(turn_time_s),
                }
            }
        };

        cfg.max_slots = self.run.max_slots.unwrap_or(cfg.max_slots);
        cfg.seed = self.run.seed.unwrap_or(cfg.seed);
        cfg.slot_duration_s = self.run.slot_duration_s.unwrap_or(cfg.slot_duration_s);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully explicit file for `cfg`; parsing it back yields `cfg` again.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        let mut carriers = BTreeMap::new();
        for c in &cfg.carriers {
            let key = match c.kind {
                CarrierKind::Pcc => "pcc".to_string(),
                CarrierKind::Scc(i) => format!("scc{i}"),
            };
            carriers.insert(key, carrier_section(c));
        }
        let (arrival, rate) = match cfg.arrival {
            ArrivalMode::Burst => (ArrivalKind::Burst, None),
            ArrivalMode::PerSlot { rate } => (ArrivalKind::PerSlot, Some(rate)),
            ArrivalMode::Saturated => (ArrivalKind::Saturated, None),
        };
        let trajectory = match cfg.trajectory {
            Trajectory::Static { distance_m } => TrajectorySection {
                kind: Some(TrajectoryKind::Static),
                distance_m: Some(distance_m),
                ..Default::default()
            },
            Trajectory::OutAndBack {
                start_m,
                speed_mps,
                turn_time_s,
            } => TrajectorySection {
                kind: Some(TrajectoryKind::OutAndBack),
                distance_m: None,
                start_m: Some(start_m),
                speed_mps: Some(speed_mps),
                turn_time_s: Some(turn_time_s),
            },
        };
        let c = &cfg.controller;
        Self {
            workload: WorkloadSection {
                packets: Some(cfg.packets),
                arrival: Some(arrival),
                rate,
                dispatch_quantum: cfg.dispatch_quantum,
            },
            carriers: Some(carriers),
            channel: ChannelSection {
                d_xn: Some(cfg.d_xn),
                secondary_offset_m: Some(cfg.secondary_offset_m),
            },
            controller: ControllerSection {
                policy: Some(cfg.policy),
                horizon: Some(c.horizon),
                b_max: c.b_max,
                initial_gains: Some(c.initial_gains),
                gain_min: Some(c.gain_min),
                gain_max: Some(c.gain_max),
                t_p: Some(c.t_p),
                t_i: Some(c.t_i),
                t_d: Some(c.t_d),
                membership_width: Some(c.membership_width),
                anchor: Some(c.anchor),
                hold: Some(c.hold),
                ltr: Some(cfg.ltr),
                qlearning: Some(cfg.qlearning),
            },
            trajectory,
            run: RunSection {
                max_slots: Some(cfg.max_slots),
                seed: Some(cfg.seed),
                slot_duration_s: Some(cfg.slot_duration_s),
            },
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn scenario_to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string(&ConfigFile::from_scenario(cfg)).expect("scenario serialises")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[carriers.pcc]\n[carriers.scc1]\n";

    #[test]
    fn minimal_file_is_the_static_default() {
        assert_eq!(parse_scenario(MINIMAL).unwrap(), ScenarioConfig::static_default(1));
    }

    #[test]
    fn round_trip() {
        for cfg in [
            ScenarioConfig::static_default(3),
            ScenarioConfig::mobile_default(2),
            ScenarioConfig::flat(1),
        ] {
            let text = scenario_to_toml(&cfg);
            assert_eq!(parse_scenario(&text).unwrap(), cfg, "{text}");
        }
        let mut cfg = ScenarioConfig::static_default(2);
        cfg.arrival = ArrivalMode::PerSlot { rate: 4 };
        cfg.controller.b_max = Some(50.0);
        cfg.policy = PolicyKind::Qlearning;
        assert_eq!(parse_scenario(&scenario_to_toml(&cfg)).unwrap(), cfg);
    }

    fn field_of(text: &str) -> String {
        match parse_scenario(text) {
            Err(ConfigError::Field { field, .. }) => field,
            other => panic!("expected a field error, got {other:?}"),
        }
    }

    #[test]
    fn missing_sections_are_named() {
        assert_eq!(field_of("[workload]\npackets = 5\n"), "carriers");
        assert_eq!(field_of("[carriers.scc1]\n"), "carriers.pcc");
        assert_eq!(field_of("[carriers.pcc]\n"), "carriers.scc1");
        assert_eq!(
            field_of("[carriers.pcc]\n[carriers.scc1]\n[carriers.scc3]\n"),
            "carriers.scc2"
        );
        assert_eq!(field_of("[carriers.pcc]\n[carriers.mmwave]\n"), "carriers.mmwave");
    }

    #[test]
    fn invalid_values_are_named() {
        assert_eq!(
            field_of(&format!("{MINIMAL}[controller]\nhorizon = 1\n")),
            "controller.horizon"
        );
        assert_eq!(
            field_of("[carriers.pcc]\n[carriers.scc1]\nsigma2 = -0.5\n"),
            "carriers.scc1.sigma2"
        );
        assert_eq!(
            field_of(&format!("{MINIMAL}[workload]\narrival = \"per_slot\"\n")),
            "workload.rate"
        );
        assert_eq!(
            field_of(&format!("{MINIMAL}[trajectory]\nspeed_mps = 3.0\n")),
            "trajectory.speed_mps"
        );
        assert_eq!(
            field_of(&format!("{MINIMAL}[controller.qlearning]\nepsilon = 2.0\n")),
            "controller.qlearning.epsilon"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario(&format!("{MINIMAL}[channel]\nxn_delay = 3\n")).unwrap_err();
        assert!(err.to_string().contains("xn_delay"), "{err}");
    }

    #[test]
    fn mobile_file() {
        let text = format!(
            "{MINIMAL}[workload]\narrival = \"saturated\"\n[trajectory]\nkind = \"out_and_back\"\nspeed_mps = 5.0\n[run]\nmax_slots = 20000\n"
        );
        let cfg = parse_scenario(&text).unwrap();
        assert_eq!(cfg.arrival, ArrivalMode::Saturated);
        assert_eq!(
            cfg.trajectory,
            Trajectory::OutAndBack {
                start_m: 100.0,
                speed_mps: 5.0,
                turn_time_s: 10.0
            }
        );
    }
}
