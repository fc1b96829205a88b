//! Simulation configuration, validation and the flat `key = value` file format.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::energy::RadioModel;

/// Route selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    /// Greedy forwarding to the alive neighbour with the highest residual energy.
    He,
    /// Minimum predicted network energy path to the base station.
    Mecrt,
    /// Fewest hops, energy-naive baseline.
    MinHop,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::He, Strategy::Mecrt, Strategy::MinHop];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::He => "he",
            Strategy::Mecrt => "mecrt",
            Strategy::MinHop => "minhop",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "he" => Ok(Strategy::He),
            "mecrt" => Ok(Strategy::Mecrt),
            "minhop" => Ok(Strategy::MinHop),
            _ => Err(ConfigError::InvalidValue {
                key: "strategy".into(),
                value: s.into(),
                reason: "expected one of he, mecrt, minhop".into(),
            }),
        }
    }
}

/// How the source of each round's reading is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrafficMode {
    /// A uniform random event point is sensed by the nearest alive node within sensing range.
    EventPoint,
    /// A uniformly chosen alive node generates the reading.
    RandomSource,
}

impl TrafficMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficMode::EventPoint => "event_point",
            TrafficMode::RandomSource => "random_source",
        }
    }
}

impl fmt::Display for TrafficMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrafficMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "event_point" => Ok(TrafficMode::EventPoint),
            "random_source" => Ok(TrafficMode::RandomSource),
            _ => Err(ConfigError::InvalidValue {
                key: "traffic_mode".into(),
                value: s.into(),
                reason: "expected event_point or random_source".into(),
            }),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("duplicate config key `{0}`")]
    DuplicateKey(String),
}

/// Every tunable of a simulation run. Defaults reproduce the reference scenario:
/// 50 nodes with 0.5 J each in a 50 m x 50 m field, 15 m radio range, 8 m sensing
/// range, base station at (25, 150), 2000-bit data and 248-bit control packets.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub node_count: usize,
    pub initial_energy_j: f64,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub tx_range_m: f64,
    pub sense_range_m: f64,
    pub bs_x_m: f64,
    pub bs_y_m: f64,
    pub data_packet_bits: u64,
    pub control_packet_bits: u64,
    pub data_rate_bps: f64,
    /// Recorded for provenance only; latency uses `data_rate_bps`.
    pub bandwidth_bps: f64,
    pub seed: u64,
    pub max_rounds: u64,
    pub strategy: Strategy,
    pub e_elec_j_per_bit: f64,
    pub eps_amp_j_per_bit_m2: f64,
    pub idle_drain_j_per_round: f64,
    pub traffic_mode: TrafficMode,
    /// Per-round uniform displacement bound per axis; 0 keeps nodes static.
    pub mobility_step_m: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let radio = RadioModel::default();
        SimConfig {
            node_count: 50,
            initial_energy_j: 0.5,
            area_width_m: 50.0,
            area_height_m: 50.0,
            tx_range_m: 15.0,
            sense_range_m: 8.0,
            bs_x_m: 25.0,
            bs_y_m: 150.0,
            data_packet_bits: 2000,
            control_packet_bits: 248,
            data_rate_bps: 100.0,
            bandwidth_bps: 5000.0,
            seed: 1,
            max_rounds: 1_000_000,
            strategy: Strategy::Mecrt,
            e_elec_j_per_bit: radio.e_elec_j_per_bit,
            eps_amp_j_per_bit_m2: radio.eps_amp_j_per_bit_m2,
            idle_drain_j_per_round: 0.0,
            traffic_mode: TrafficMode::EventPoint,
            mobility_step_m: 0.0,
        }
    }
}

/// Keys accepted in config files, in emission order.
pub const CONFIG_KEYS: [&str; 20] = [
    "node_count",
    "initial_energy_j",
    "area_width_m",
    "area_height_m",
    "tx_range_m",
    "sense_range_m",
    "bs_x_m",
    "bs_y_m",
    "data_packet_bits",
    "control_packet_bits",
    "data_rate_bps",
    "bandwidth_bps",
    "seed",
    "max_rounds",
    "strategy",
    "e_elec_j_per_bit",
    "eps_amp_j_per_bit_m2",
    "idle_drain_j_per_round",
    "traffic_mode",
    "mobility_step_m",
];

fn invalid(key: &str, value: impl fmt::Display, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| invalid(key, value, "not a number of the expected type"))
}

impl SimConfig {
    pub fn radio(&self) -> RadioModel {
        RadioModel {
            e_elec_j_per_bit: self.e_elec_j_per_bit,
            eps_amp_j_per_bit_m2: self.eps_amp_j_per_bit_m2,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count == 0 {
            return Err(invalid("node_count", self.node_count, "must be positive"));
        }
        let positive = [
            ("initial_energy_j", self.initial_energy_j),
            ("area_width_m", self.area_width_m),
            ("area_height_m", self.area_height_m),
            ("tx_range_m", self.tx_range_m),
            ("sense_range_m", self.sense_range_m),
            ("data_rate_bps", self.data_rate_bps),
            ("bandwidth_bps", self.bandwidth_bps),
            ("e_elec_j_per_bit", self.e_elec_j_per_bit),
            ("eps_amp_j_per_bit_m2", self.eps_amp_j_per_bit_m2),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, v, "must be finite and strictly positive"));
            }
        }
        for (key, v) in [
            ("idle_drain_j_per_round", self.idle_drain_j_per_round),
            ("mobility_step_m", self.mobility_step_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, v, "must be finite and non-negative"));
            }
        }
        for (key, v) in [("bs_x_m", self.bs_x_m), ("bs_y_m", self.bs_y_m)] {
            if !v.is_finite() {
                return Err(invalid(key, v, "must be finite"));
            }
        }
        if self.data_packet_bits == 0 {
            return Err(invalid("data_packet_bits", 0, "must be positive"));
        }
        if self.control_packet_bits == 0 {
            return Err(invalid("control_packet_bits", 0, "must be positive"));
        }
        if self.sense_range_m > self.tx_range_m {
            return Err(invalid(
                "sense_range_m",
                self.sense_range_m,
                "must not exceed tx_range_m",
            ));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "node_count" => self.node_count = parse_num(key, value)?,
            "initial_energy_j" => self.initial_energy_j = parse_num(key, value)?,
            "area_width_m" => self.area_width_m = parse_num(key, value)?,
            "area_height_m" => self.area_height_m = parse_num(key, value)?,
            "tx_range_m" => self.tx_range_m = parse_num(key, value)?,
            "sense_range_m" => self.sense_range_m = parse_num(key, value)?,
            "bs_x_m" => self.bs_x_m = parse_num(key, value)?,
            "bs_y_m" => self.bs_y_m = parse_num(key, value)?,
            "data_packet_bits" => self.data_packet_bits = parse_num(key, value)?,
            "control_packet_bits" => self.control_packet_bits = parse_num(key, value)?,
            "data_rate_bps" => self.data_rate_bps = parse_num(key, value)?,
            "bandwidth_bps" => self.bandwidth_bps = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "max_rounds" => self.max_rounds = parse_num(key, value)?,
            "strategy" => self.strategy = value.parse()?,
            "e_elec_j_per_bit" => self.e_elec_j_per_bit = parse_num(key, value)?,
            "eps_amp_j_per_bit_m2" => self.eps_amp_j_per_bit_m2 = parse_num(key, value)?,
            "idle_drain_j_per_round" => self.idle_drain_j_per_round = parse_num(key, value)?,
            "traffic_mode" => self.traffic_mode = value.parse()?,
            "mobility_step_m" => self.mobility_step_m = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Textual value of one key, in the same form [`SimConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        // `{:?}` on f64 is the shortest string that parses back to the same bits.
        let s = match key {
            "node_count" => self.node_count.to_string(),
            "initial_energy_j" => format!("{:?}", self.initial_energy_j),
            "area_width_m" => format!("{:?}", self.area_width_m),
            "area_height_m" => format!("{:?}", self.area_height_m),
            "tx_range_m" => format!("{:?}", self.tx_range_m),
            "sense_range_m" => format!("{:?}", self.sense_range_m),
            "bs_x_m" => format!("{:?}", self.bs_x_m),
            "bs_y_m" => format!("{:?}", self.bs_y_m),
            "data_packet_bits" => self.data_packet_bits.to_string(),
            "control_packet_bits" => self.control_packet_bits.to_string(),
            "data_rate_bps" => format!("{:?}", self.data_rate_bps),
            "bandwidth_bps" => format!("{:?}", self.bandwidth_bps),
            "seed" => self.seed.to_string(),
            "max_rounds" => self.max_rounds.to_string(),
            "strategy" => self.strategy.to_string(),
            "e_elec_j_per_bit" => format!("{:?}", self.e_elec_j_per_bit),
            "eps_amp_j_per_bit_m2" => format!("{:?}", self.eps_amp_j_per_bit_m2),
            "idle_drain_j_per_round" => format!("{:?}", self.idle_drain_j_per_round),
            "traffic_mode" => self.traffic_mode.to_string(),
            "mobility_step_m" => format!("{:?}", self.mobility_step_m),
            _ => return None,
        };
        Some(s)
    }

    /// Parses a config file body. Missing keys keep their defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut config = SimConfig::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey(key.into()));
            }
            config.set(key, value)?;
            seen.push(key.to_string());
        }
        config.validate()?;
        Ok(config)
    }

    /// Emits every key, one `key = value` line each, in [`CONFIG_KEYS`] order.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.get(key).expect("known key"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let c = SimConfig::default();
        assert_eq!(c.node_count, 50);
        assert_eq!(c.initial_energy_j, 0.5);
        assert_eq!((c.area_width_m, c.area_height_m), (50.0, 50.0));
        assert_eq!(c.tx_range_m, 15.0);
        assert_eq!(c.sense_range_m, 8.0);
        assert_eq!((c.bs_x_m, c.bs_y_m), (25.0, 150.0));
        assert_eq!(c.data_packet_bits, 2000);
        assert_eq!(c.control_packet_bits, 248);
        assert_eq!(c.data_rate_bps, 100.0);
        assert_eq!(c.bandwidth_bps, 5000.0);
        assert_eq!(c.idle_drain_j_per_round, 0.0);
        c.validate().unwrap();
    }

    #[test]
    fn emit_parse_round_trip() {
        let c = SimConfig {
            strategy: Strategy::He,
            seed: u64::MAX,
            e_elec_j_per_bit: 0.1 + 0.2,
            traffic_mode: TrafficMode::RandomSource,
            ..SimConfig::default()
        };
        assert_eq!(SimConfig::parse(&c.emit()).unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SimConfig::parse("node_count = 5\nfoo = 1\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("foo".into()));
    }

    #[test]
    fn missing_keys_default_and_comments_ignored() {
        let c = SimConfig::parse("# header\n\nnode_count = 10 # ten\n").unwrap();
        assert_eq!(c.node_count, 10);
        assert_eq!(c.tx_range_m, 15.0);
    }

    #[test]
    fn validation_names_offending_key() {
        let err = SimConfig::parse("sense_range_m = 20").unwrap_err();
        assert!(err.to_string().contains("sense_range_m"), "{err}");
        let err = SimConfig::parse("initial_energy_j = -1").unwrap_err();
        assert!(err.to_string().contains("initial_energy_j"), "{err}");
        let err = SimConfig::parse("strategy = bogus").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = SimConfig::parse("node_count = 0").unwrap_err();
        assert!(err.to_string().contains("node_count"), "{err}");
    }

    #[test]
    fn syntax_and_duplicates() {
        assert!(matches!(
            SimConfig::parse("node_count 5"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert_eq!(
            SimConfig::parse("seed = 1\nseed = 2").unwrap_err(),
            ConfigError::DuplicateKey("seed".into())
        );
    }

    #[test]
    fn zero_idle_drain_and_max_rounds_allowed() {
        let c = SimConfig::parse("max_rounds = 0\nidle_drain_j_per_round = 0").unwrap();
        assert_eq!(c.max_rounds, 0);
    }
}
