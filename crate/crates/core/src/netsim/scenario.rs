//! Scenario files: a TOML description of topology, schedule, transport,
//! sensors, constants and environment changes.
//!
//! ```toml
//! seed = 7
//! rounds = 20                 # each device fires at most this many times
//! until = 100.0               # optional bound on simulated time
//! export_view = "end-of-round"
//!
//! [topology]
//! kind = "grid"               # grid | unit-disk | edges | random-unit-disk
//! width = 10
//! height = 10
//!
//! [schedule]
//! policy = "periodic"         # or "reactive"
//! period = 1.0
//! jitter = 0.0                # each interval is period + U(-jitter, jitter)
//! start_spread = 0.0          # first fire at offset + U(0, start_spread)
//! min_span = 0.0              # reactive devices: minimum time between fires
//!
//! [link]
//! delay = 0.1                 # or { min = 0.05, max = 0.2 }; default 10% of the sender's period
//! loss = 0.0
//! ttl = 2.5                   # default 2.5 x the largest period
//!
//! [locations]
//! mode = "single"             # single | distinct | groups
//!
//! [constants]
//! THRESHOLD = 10
//!
//! [sensors.source]
//! default = false
//! devices = { "0" = true }
//! changes = [ { time = 5.0, device = 0, value = false } ]
//!
//! [[env]]
//! time = 3.0
//! action = "kill"
//! device = 4
//! ```
//!
//! Sensor and constant values are TOML numbers, Booleans or arrays (tuples),
//! or strings holding a literal expression such as `"Vec2(1, 0)"`, `"Null"`
//! or `"\"text\""`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer};
use thiserror::Error;

use crate::eval::{eval_round, ExportView, RoundContext};
use crate::lang::{parse_expr, Program};
use crate::value::{DeviceId, LocalValue, Value};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid<T>(message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(message.into()))
}

/// A local value written in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal(pub LocalValue);

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = toml::Value::deserialize(d)?;
        literal_from_toml(&raw).map(Literal).map_err(serde::de::Error::custom)
    }
}

fn literal_from_toml(v: &toml::Value) -> Result<LocalValue, String> {
    Ok(match v {
        toml::Value::Integer(i) => LocalValue::Num(*i as f64),
        toml::Value::Float(f) => LocalValue::Num(*f),
        toml::Value::Boolean(b) => LocalValue::Bool(*b),
        toml::Value::Array(items) => LocalValue::tuple(items.iter().map(literal_from_toml).collect::<Result<_, _>>()?),
        toml::Value::String(s) => parse_literal(s)?,
        other => return Err(format!("unsupported value {}", other)),
    })
}

/// Evaluate a closed literal expression such as `Vec2(1, -2)`.
pub fn parse_literal(text: &str) -> Result<LocalValue, String> {
    let expr = parse_expr(text).map_err(|e| format!("bad literal {:?}: {}", text, e))?;
    let program = Program {
        functions: Vec::new(),
        main: expr,
    };
    match eval_round(&program, &RoundContext::new(DeviceId(0))) {
        Ok(export) => match export.root() {
            Value::Local(v) => Ok(v.clone()),
            Value::Field(_) => Err(format!("literal {:?} is not a local value", text)),
        },
        Err(e) => Err(format!("literal {:?} does not evaluate: {}", text, e)),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Program file, relative to the scenario file.
    #[serde(default)]
    pub program: Option<String>,
    #[serde(default)]
    pub rounds: Option<u32>,
    #[serde(default)]
    pub until: Option<f64>,
    #[serde(default, with = "export_view_serde")]
    pub export_view: ExportView,
    pub topology: TopologySpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub link: LinkSpec,
    #[serde(default)]
    pub locations: LocationSpec,
    #[serde(default)]
    pub constants: BTreeMap<String, Literal>,
    #[serde(default)]
    pub sensors: BTreeMap<String, SensorSpec>,
    #[serde(default)]
    pub env: Vec<EnvAction>,
}

mod export_view_serde {
    use super::*;

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExportView, D::Error> {
        match String::deserialize(d)?.as_str() {
            "end-of-round" => Ok(ExportView::EndOfRound),
            "mid-round" => Ok(ExportView::MidRound),
            other => Err(serde::de::Error::custom(format!(
                "export_view must be \"end-of-round\" or \"mid-round\", not {:?}",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologySpec {
    /// `width x height` devices, ids row-major, each linked to its axis
    /// neighbours; device `(x, y)` sits at `(x, y) * spacing`.
    Grid {
        width: u32,
        height: u32,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// Devices at the given positions, linked when within `radius`.
    UnitDisk { radius: f64, positions: Vec<[f64; 2]> },
    /// Explicit undirected links between `devices` devices.
    Edges {
        devices: u32,
        edges: Vec<[u32; 2]>,
        #[serde(default)]
        positions: Option<Vec<[f64; 2]>>,
    },
    /// `devices` positions drawn uniformly in a `side x side` square from the
    /// scenario seed, redrawn until the unit-disk graph is connected.
    RandomUnitDisk { devices: u32, radius: f64, side: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySpec {
    #[default]
    Periodic,
    Reactive,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub start_spread: f64,
    #[serde(default)]
    pub min_span: f64,
    /// Offset of each device's local clock from global time.
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub devices: Vec<DeviceScheduleSpec>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            policy: PolicySpec::Periodic,
            period: 1.0,
            jitter: 0.0,
            offset: 0.0,
            start_spread: 0.0,
            min_span: 0.0,
            skew: 0.0,
            devices: Vec::new(),
        }
    }
}

/// Per-device schedule overrides.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceScheduleSpec {
    pub id: u32,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub offset: Option<f64>,
    #[serde(default)]
    pub min_span: Option<f64>,
    #[serde(default)]
    pub skew: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DelaySpec {
    Fixed(f64),
    Uniform { min: f64, max: f64 },
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default)]
    pub delay: Option<DelaySpec>,
    #[serde(default)]
    pub loss: f64,
    #[serde(default)]
    pub ttl: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LocationMode {
    /// Every device in location 0.
    #[default]
    Single,
    /// Device `i` in location `i`.
    Distinct,
    /// Location `k` holds the devices of `groups[k]`; others use `default`.
    Groups,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct LocationSpec {
    #[serde(default)]
    pub mode: LocationMode,
    #[serde(default)]
    pub groups: Vec<Vec<u32>>,
    #[serde(default)]
    pub default: u32,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    #[serde(default = "null_literal")]
    pub default: Literal,
    /// Initial values per device id (TOML keys are strings).
    #[serde(default)]
    pub devices: BTreeMap<String, Literal>,
    #[serde(default)]
    pub changes: Vec<SensorChange>,
}

fn null_literal() -> Literal {
    Literal(LocalValue::Null)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SensorChange {
    pub time: f64,
    /// Target device; every device when absent.
    #[serde(default)]
    pub device: Option<u32>,
    pub value: Literal,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct EnvAction {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EnvKind,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum EnvKind {
    Kill {
        device: u32,
    },
    Revive {
        device: u32,
    },
    AddEdge {
        a: u32,
        b: u32,
    },
    RemoveEdge {
        a: u32,
        b: u32,
    },
    Move {
        device: u32,
        x: f64,
        y: f64,
    },
    Sense {
        sensor: String,
        #[serde(default)]
        device: Option<u32>,
        value: Literal,
    },
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// A minimal scenario: synchronous lossless periodic rounds on `topology`.
    pub fn synchronous(seed: u64, rounds: u32, topology: TopologySpec) -> Self {
        ScenarioConfig {
            seed,
            program: None,
            rounds: Some(rounds),
            until: None,
            export_view: ExportView::EndOfRound,
            topology,
            schedule: ScheduleSpec::default(),
            link: LinkSpec::default(),
            locations: LocationSpec::default(),
            constants: BTreeMap::new(),
            sensors: BTreeMap::new(),
            env: Vec::new(),
        }
    }

    pub fn device_count(&self) -> u32 {
        match &self.topology {
            TopologySpec::Grid { width, height, .. } => width * height,
            TopologySpec::UnitDisk { positions, .. } => positions.len() as u32,
            TopologySpec::Edges { devices, .. } => *devices,
            TopologySpec::RandomUnitDisk { devices, .. } => *devices,
        }
    }

    pub fn constants_map(&self) -> BTreeMap<String, LocalValue> {
        self.constants.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect()
    }

    /// Replace or add a constant, e.g. from a command-line override.
    pub fn set_constant(&mut self, name: &str, value: LocalValue) {
        self.constants.insert(name.to_string(), Literal(value));
    }

    pub fn set_sensor_default(&mut self, name: &str, value: LocalValue) {
        self.sensors
            .entry(name.to_string())
            .or_insert_with(|| SensorSpec {
                default: null_literal(),
                devices: BTreeMap::new(),
                changes: Vec::new(),
            })
            .default = Literal(value);
    }

    pub fn set_sensor(&mut self, name: &str, device: u32, value: LocalValue) {
        self.set_sensor_default_if_missing(name);
        self.sensors
            .get_mut(name)
            .unwrap()
            .devices
            .insert(device.to_string(), Literal(value));
    }

    fn set_sensor_default_if_missing(&mut self, name: &str) {
        if !self.sensors.contains_key(name) {
            self.set_sensor_default(name, LocalValue::Null);
        }
    }

    // Comparisons are negated so that NaN fails them too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.device_count();
        let known = |id: u32, what: &str| -> Result<(), ScenarioError> {
            if id < n {
                Ok(())
            } else {
                invalid(format!("{} refers to device {}, but there are {} devices", what, id, n))
            }
        };
        if let Some(r) = self.rounds {
            if r == 0 {
                return invalid("rounds must be positive");
            }
        }
        if let Some(u) = self.until {
            if !(u >= 0.0) {
                return invalid("until must be a non-negative time");
            }
        }
        if self.rounds.is_none() && self.until.is_none() {
            return invalid("a stop condition is required: set rounds or until");
        }
        match &self.topology {
            TopologySpec::Grid { spacing, .. } if !(*spacing > 0.0) => return invalid("grid spacing must be positive"),
            TopologySpec::UnitDisk { radius, .. } | TopologySpec::RandomUnitDisk { radius, .. } if !(*radius > 0.0) => {
                return invalid("radius must be positive")
            }
            TopologySpec::RandomUnitDisk { side, .. } if !(*side > 0.0) => return invalid("side must be positive"),
            TopologySpec::Edges {
                edges,
                positions,
                devices,
            } => {
                for [a, b] in edges {
                    known(*a, "edge")?;
                    known(*b, "edge")?;
                }
                if let Some(p) = positions {
                    if p.len() != *devices as usize {
                        return invalid("edges topology: positions must list every device");
                    }
                }
            }
            _ => {}
        }
        let s = &self.schedule;
        check_schedule(s.period, s.jitter, s.min_span, "schedule")?;
        for d in &s.devices {
            known(d.id, "schedule override")?;
            check_schedule(
                d.period.unwrap_or(s.period),
                d.jitter.unwrap_or(s.jitter),
                d.min_span.unwrap_or(s.min_span),
                &format!("schedule of device {}", d.id),
            )?;
        }
        if !(0.0..=1.0).contains(&self.link.loss) {
            return invalid("link loss must be a probability");
        }
        if let Some(ttl) = self.link.ttl {
            if !(ttl > 0.0) {
                return invalid("ttl must be positive");
            }
        }
        match self.link.delay {
            Some(DelaySpec::Fixed(d)) if !(d >= 0.0) => return invalid("delay must be non-negative"),
            Some(DelaySpec::Uniform { min, max }) if !(min >= 0.0 && max >= min) => {
                return invalid("uniform delay needs 0 <= min <= max")
            }
            _ => {}
        }
        if self.locations.mode == LocationMode::Groups {
            for g in &self.locations.groups {
                for id in g {
                    known(*id, "location group")?;
                }
            }
        }
        for (name, spec) in &self.sensors {
            for key in spec.devices.keys() {
                let id: u32 = key
                    .parse()
                    .map_err(|_| ScenarioError::Invalid(format!("sensor {}: {:?} is not a device id", name, key)))?;
                known(id, &format!("sensor {}", name))?;
            }
            for c in &spec.changes {
                if let Some(d) = c.device {
                    known(d, &format!("sensor {} change", name))?;
                }
            }
        }
        for a in &self.env {
            match &a.kind {
                EnvKind::Kill { device } | EnvKind::Revive { device } | EnvKind::Move { device, .. } => {
                    known(*device, "env action")?
                }
                EnvKind::AddEdge { a, b } | EnvKind::RemoveEdge { a, b } => {
                    known(*a, "env action")?;
                    known(*b, "env action")?;
                }
                EnvKind::Sense { device: Some(d), .. } => known(*d, "env action")?,
                EnvKind::Sense { .. } => {}
            }
        }
        Ok(())
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_schedule(period: f64, jitter: f64, min_span: f64, what: &str) -> Result<(), ScenarioError> {
    if !(period > 0.0) {
        return invalid(format!("{}: period must be positive", what));
    }
    if !(jitter >= 0.0 && jitter < period) {
        return invalid(format!("{}: jitter must be in [0, period)", what));
    }
    if !(min_span >= 0.0) {
        return invalid(format!("{}: min_span must be non-negative", what));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_schema_parses() {
        let text = r#"
seed = 3
rounds = 5
export_view = "mid-round"
[topology]
kind = "edges"
devices = 3
edges = [[0, 1], [1, 2]]
[schedule]
policy = "reactive"
min_span = 1.0
devices = [ { id = 2, policy = "periodic", period = 2.0 } ]
[link]
delay = { min = 0.1, max = 0.3 }
loss = 0.25
[locations]
mode = "groups"
groups = [[0], [1, 2]]
[constants]
THRESHOLD = 10
ORIGIN = "Vec2(0, -1)"
[sensors.level]
default = 0
devices = { "1" = 12.5 }
changes = [ { time = 2.0, device = 1, value = 3 } ]
[[env]]
time = 4.0
action = "sense"
sensor = "level"
value = "Null"
[[env]]
time = 5.0
action = "add-edge"
a = 0
b = 2
"#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.export_view, ExportView::MidRound);
        assert_eq!(c.link.delay, Some(DelaySpec::Uniform { min: 0.1, max: 0.3 }));
        assert_eq!(c.constants["ORIGIN"].0, LocalValue::vec2(0.0, -1.0));
        assert_eq!(c.sensors["level"].devices["1"].0, LocalValue::Num(12.5));
        assert_eq!(
            c.env[0].kind,
            EnvKind::Sense {
                sensor: "level".into(),
                device: None,
                value: Literal(LocalValue::Null)
            }
        );
        assert_eq!(c.env[1].kind, EnvKind::AddEdge { a: 0, b: 2 });
    }

    #[test]
    fn validation_failures() {
        let base = "seed = 1\nrounds = 3\n[topology]\nkind = \"edges\"\ndevices = 2\nedges = [[0, 1]]\n";
        assert!(ScenarioConfig::from_toml(base).is_ok());
        assert!(matches!(
            ScenarioConfig::from_toml("rounds = 3\n[topology]\nkind = \"grid\"\nwidth = 1\nheight = 1\n"),
            Err(ScenarioError::Syntax(_))
        ));
        let bad = [
            format!("{}[link]\nloss = 1.5\n", base),
            base.replace("[[0, 1]]", "[[0, 5]]"),
            base.replace("rounds = 3\n", ""),
            format!("{}[schedule]\nperiod = 0\n", base),
            format!("{}[[env]]\ntime = 1.0\naction = \"kill\"\ndevice = 9\n", base),
        ];
        for text in bad {
            assert!(
                matches!(ScenarioConfig::from_toml(&text), Err(ScenarioError::Invalid(_))),
                "{}",
                text
            );
        }
    }

    #[test]
    fn literals() {
        assert_eq!(
            parse_literal("[1, True]"),
            Ok(LocalValue::tuple(vec![LocalValue::Num(1.0), LocalValue::Bool(true)]))
        );
        assert_eq!(parse_literal("HIGH"), Ok(LocalValue::symbol("HIGH")));
        assert!(parse_literal("nbr{1}").is_err());
    }
}
