//! Scenario description: node geometry on a line through the sink, frame
//! durations, channel constants, the learning schedule, and the flat
//! `key = value` config format that carries all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::time::Time;
use crate::{Error, Result};

/// Node address. Id 0 is always the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u16);

impl NodeId {
    pub const SINK: NodeId = NodeId(0);

    pub fn is_sink(self) -> bool {
        self == Self::SINK
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Complete, validated description of one simulated deployment.
///
/// Positions are meters from the sink along a line; the sink always sits at
/// 0 m. NAV durations are quantized to 0.1 s ticks, and `nav_index_count`
/// ticks bound every NAV the policy may pick, so the largest selectable wait
/// is `(nav_index_count - 1) * 0.1 s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Every node in the deployment, sink included (at 0 m).
    pub node_positions: BTreeMap<NodeId, f64>,
    pub max_range: f64,
    pub sound_speed: f64,
    pub control_frame_duration: Time,
    pub data_frame_duration: Time,
    pub episodes: u64,
    pub nav_index_count: usize,
    pub epsilon_threshold: u64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Defaults with no nodes besides the sink; scenarios list their nodes
    /// explicitly in the config file.
    fn default() -> Self {
        let mut node_positions = BTreeMap::new();
        node_positions.insert(NodeId::SINK, 0.0);
        ScenarioConfig {
            node_positions,
            max_range: 5000.0,
            sound_speed: 1500.0,
            control_frame_duration: Time::from_millis(3000),
            data_frame_duration: Time::from_millis(7000),
            episodes: 10_000,
            nav_index_count: 390,
            epsilon_threshold: 11_000,
            epsilon_decay: 0.95,
            epsilon_floor: 0.02,
            seed: 42,
        }
    }
}

impl ScenarioConfig {
    /// The bundled reference deployment (four nodes on a 5 km line).
    pub fn reference() -> ScenarioConfig {
        ScenarioConfig::parse_str(include_str!("../scenarios/default.cfg"))
            .expect("bundled scenario must parse")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)?;
        ScenarioConfig::parse_str(&text)
    }

    /// Parses the flat `key = value` format. `#` starts a comment, blank
    /// lines are ignored, and every unknown or duplicated key is rejected
    /// with its line number.
    pub fn parse_str(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<String> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key.to_string());
            apply_key(&mut cfg, key, value, line_no)?;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every scenario invariant; parse and manual construction both
    /// funnel through this.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidScenario(m));
        if self.sound_speed <= 0.0 || !self.sound_speed.is_finite() {
            return fail(format!("sound_speed must be positive, got {}", self.sound_speed));
        }
        if self.max_range <= 0.0 || !self.max_range.is_finite() {
            return fail(format!("max_range must be positive, got {}", self.max_range));
        }
        if self.control_frame_duration == Time::ZERO || self.data_frame_duration == Time::ZERO {
            return fail("frame durations must be positive".into());
        }
        if self.nav_index_count == 0 {
            return fail("nav_index_count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_floor) {
            return fail(format!("epsilon_floor must lie in [0, 1], got {}", self.epsilon_floor));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return fail(format!("epsilon_decay must lie in (0, 1], got {}", self.epsilon_decay));
        }
        match self.node_positions.get(&NodeId::SINK) {
            Some(&p) if p == 0.0 => {}
            Some(&p) => return fail(format!("the sink must sit at 0 m, got {p}")),
            None => return fail("the sink (node id 0) is missing".into()),
        }
        for (&id, &pos) in &self.node_positions {
            if !pos.is_finite() || pos < 0.0 {
                return fail(format!("node {id} has invalid position {pos}"));
            }
            if pos > self.max_range {
                return fail(format!(
                    "node {id} at {pos} m lies beyond max_range {} m",
                    self.max_range
                ));
            }
        }
        Ok(())
    }

    pub fn position(&self, id: NodeId) -> Result<f64> {
        self.node_positions
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InvalidScenario(format!("unknown node id {id}")))
    }

    /// Non-sink nodes in ascending id order.
    pub fn non_sink_nodes(&self) -> Vec<NodeId> {
        self.node_positions
            .keys()
            .copied()
            .filter(|id| !id.is_sink())
            .collect()
    }

    /// Largest NAV the index space can express: `(nav_index_count - 1)` ticks.
    pub fn max_nav(&self) -> Time {
        Time::from_ticks(self.nav_index_count as u64 - 1)
    }

    /// One-way delay between two known nodes.
    pub fn delay_between(&self, a: NodeId, b: NodeId) -> Result<Time> {
        propagation_delay(pair_distance(a, b, self)?, self.sound_speed)
    }

    /// Whether `listener` can hear `transmitter` (within `max_range`).
    pub fn in_range(&self, transmitter: NodeId, listener: NodeId) -> Result<bool> {
        Ok(pair_distance(transmitter, listener, self)? <= self.max_range)
    }

    /// The resolved configuration as sorted `key = value` lines, used to echo
    /// the scenario into report headers.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("control_frame_duration = {}", self.control_frame_duration),
            format!("data_frame_duration = {}", self.data_frame_duration),
            format!("episodes = {}", self.episodes),
            format!("epsilon_decay = {}", self.epsilon_decay),
            format!("epsilon_floor = {}", self.epsilon_floor),
            format!("epsilon_threshold = {}", self.epsilon_threshold),
            format!("max_range = {}", self.max_range),
            format!("nav_index_count = {}", self.nav_index_count),
            format!("seed = {}", self.seed),
            format!("sound_speed = {}", self.sound_speed),
        ];
        for (&id, &pos) in &self.node_positions {
            if id.is_sink() {
                lines.push(format!("sink_location = {pos}"));
            } else {
                lines.push(format!("node{id}_location = {pos}"));
            }
        }
        lines.sort();
        lines
    }
}

fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str, line: usize) -> Result<()> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
        value.parse().map_err(|_| Error::Config {
            line,
            message: format!("invalid value for `{key}`: `{value}`"),
        })
    }

    match key {
        "episodes" => cfg.episodes = parse(key, value, line)?,
        "seed" => cfg.seed = parse(key, value, line)?,
        "max_range" => cfg.max_range = parse(key, value, line)?,
        "sound_speed" => cfg.sound_speed = parse(key, value, line)?,
        "control_frame_duration" => {
            cfg.control_frame_duration = parse_duration(key, value, line)?
        }
        "data_frame_duration" => cfg.data_frame_duration = parse_duration(key, value, line)?,
        "nav_index_count" => cfg.nav_index_count = parse(key, value, line)?,
        "epsilon_threshold" => cfg.epsilon_threshold = parse(key, value, line)?,
        "epsilon_decay" => cfg.epsilon_decay = parse(key, value, line)?,
        "epsilon_floor" => cfg.epsilon_floor = parse(key, value, line)?,
        "sink_location" => {
            let pos: f64 = parse(key, value, line)?;
            cfg.node_positions.insert(NodeId::SINK, pos);
        }
        _ => {
            if let Some(id) = node_location_key(key) {
                let pos: f64 = parse(key, value, line)?;
                cfg.node_positions.insert(id, pos);
            } else {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
    }
    Ok(())
}

fn parse_duration(key: &str, value: &str, line: usize) -> Result<Time> {
    let secs: f64 = value.parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value for `{key}`: `{value}`"),
    })?;
    if !secs.is_finite() || secs < 0.0 {
        return Err(Error::Config {
            line,
            message: format!("`{key}` must be a non-negative number of seconds"),
        });
    }
    Ok(Time::from_secs_f64(secs))
}

/// Matches `node<k>_location` for k >= 1.
fn node_location_key(key: &str) -> Option<NodeId> {
    let id: u16 = key.strip_prefix("node")?.strip_suffix("_location")?.parse().ok()?;
    (id > 0).then_some(NodeId(id))
}

/// One-way acoustic travel time over `distance_m` meters, rounded to the
/// nearest millisecond.
pub fn propagation_delay(distance_m: f64, sound_speed: f64) -> Result<Time> {
    if sound_speed <= 0.0 || !sound_speed.is_finite() {
        return Err(Error::InvalidScenario(format!(
            "sound speed must be positive, got {sound_speed}"
        )));
    }
    if distance_m < 0.0 || !distance_m.is_finite() {
        return Err(Error::InvalidScenario(format!(
            "distance must be non-negative, got {distance_m}"
        )));
    }
    Ok(Time::from_secs_f64(distance_m / sound_speed))
}

/// Line distance |pos(a) − pos(b)| in meters.
pub fn pair_distance(a: NodeId, b: NodeId, cfg: &ScenarioConfig) -> Result<f64> {
    Ok((cfg.position(a)? - cfg.position(b)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(id: u16) -> NodeId {
        NodeId(id)
    }

    #[test]
    fn reference_scenario_matches_bundled_parameters() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(cfg.position(NodeId::SINK).unwrap(), 0.0);
        assert_eq!(cfg.position(n(1)).unwrap(), 1500.0);
        assert_eq!(cfg.position(n(2)).unwrap(), 2000.0);
        assert_eq!(cfg.position(n(3)).unwrap(), 3000.0);
        assert_eq!(cfg.max_range, 5000.0);
        assert_eq!(cfg.sound_speed, 1500.0);
        assert_eq!(cfg.control_frame_duration, Time::from_millis(3000));
        assert_eq!(cfg.data_frame_duration, Time::from_millis(7000));
        assert_eq!(cfg.episodes, 10_000);
        assert_eq!(cfg.nav_index_count, 390);
        assert_eq!(cfg.max_nav(), Time::from_millis(38_900));
    }

    #[test]
    fn propagation_delay_examples() {
        assert_eq!(propagation_delay(1500.0, 1500.0).unwrap(), Time::from_millis(1000));
        assert_eq!(propagation_delay(0.0, 1500.0).unwrap(), Time::ZERO);
        // max-range delay: 5000 / 1500 s, at millisecond resolution
        assert_eq!(propagation_delay(5000.0, 1500.0).unwrap(), Time::from_millis(3333));
        assert!(propagation_delay(100.0, 0.0).is_err());
        assert!(propagation_delay(100.0, -3.0).is_err());
        assert!(propagation_delay(-1.0, 1500.0).is_err());
    }

    #[test]
    fn pair_distance_examples() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(pair_distance(n(1), n(2), &cfg).unwrap(), 500.0);
        assert_eq!(pair_distance(NodeId::SINK, n(3), &cfg).unwrap(), 3000.0);
        assert_eq!(pair_distance(n(2), n(2), &cfg).unwrap(), 0.0);
        assert!(pair_distance(n(9), n(1), &cfg).is_err());
    }

    #[test]
    fn parser_rejects_unknown_key_with_line_number() {
        let err = ScenarioConfig::parse_str("episodes = 5\nbogus_key = 3\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("bogus_key"), "{message}");
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn parser_rejects_bad_value_duplicate_and_misplaced_sink() {
        for (text, needle) in [
            ("episodes = many", "episodes"),
            ("seed = 1\nseed = 2", "duplicate"),
            ("sink_location = 10\nnode1_location = 20", "sink"),
            ("node1_location = 9000", "max_range"),
            ("node1_location = 100\nepsilon_decay = 1.5", "epsilon_decay"),
        ] {
            let err = ScenarioConfig::parse_str(text).unwrap_err();
            assert!(err.to_string().contains(needle), "{text} -> {err}");
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = ScenarioConfig::parse_str(
            "# header\n\nnode1_location = 100  # inline\n   \nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.position(n(1)).unwrap(), 100.0);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn empty_config_is_a_sink_only_scenario() {
        let cfg = ScenarioConfig::parse_str("").unwrap();
        assert!(cfg.non_sink_nodes().is_empty());
    }

    proptest! {
        #[test]
        fn pair_distance_is_symmetric_and_triangular(
            pa in 0.0f64..5000.0, pb in 0.0f64..5000.0, pc in 0.0f64..5000.0
        ) {
            let mut cfg = ScenarioConfig::default();
            cfg.node_positions.insert(n(1), pa);
            cfg.node_positions.insert(n(2), pb);
            cfg.node_positions.insert(n(3), pc);
            let d12 = pair_distance(n(1), n(2), &cfg).unwrap();
            let d21 = pair_distance(n(2), n(1), &cfg).unwrap();
            let d13 = pair_distance(n(1), n(3), &cfg).unwrap();
            let d23 = pair_distance(n(2), n(3), &cfg).unwrap();
            prop_assert_eq!(d12, d21);
            prop_assert!(d13 <= d12 + d23 + 1e-9);
        }

        #[test]
        fn propagation_delay_is_monotone_in_distance(
            d1 in 0.0f64..10_000.0, d2 in 0.0f64..10_000.0
        ) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let t_lo = propagation_delay(lo, 1500.0).unwrap();
            let t_hi = propagation_delay(hi, 1500.0).unwrap();
            prop_assert!(t_lo <= t_hi);
        }
    }
}
