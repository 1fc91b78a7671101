//! Running a corpus entry and comparing its field evolution with the bound
//! oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer};
use thiserror::Error;

use super::corpus::CorpusEntry;
use super::oracles::{
    collision_course, component, oracle_bfs, oracle_ellipse, oracle_longest_chain, oracle_same_value_component,
    replay_roundsince,
};
use crate::lang::ParseErrors;
use crate::netsim::{run, EventError, EventId, ScenarioConfig, SimError, SimulationResult, TraceFormat};
use crate::value::{compare, encode_value, local_equal, DeviceId, LocalValue, Value, ValueTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Bfs,
    LongestChain,
    Lights,
    Stereo,
    Evacuation,
    Everywhere,
    Somewhere,
    RemoteLights,
    RemoteEvacuation,
    Broadcast,
    Ellipse,
    Channel,
    Samevalue,
    Monitor,
    Adjusting,
    Parity,
}

/// When to compare: at every event, or from a number of rounds onwards.
#[derive(Debug, Clone, PartialEq)]
pub enum Horizon {
    EveryEvent,
    /// A sum of terms: integers, `D` (network diameter), `k*D` and constant
    /// names, e.g. `2*D+2+DELAY`.
    Rounds(String),
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let h = Horizon::parse(&s);
        h.resolve(0, &BTreeMap::new()).map_err(serde::de::Error::custom)?;
        Ok(h)
    }
}

impl Horizon {
    pub fn parse(text: &str) -> Self {
        if text.trim() == "every" {
            Horizon::EveryEvent
        } else {
            Horizon::Rounds(text.trim().to_string())
        }
    }

    /// Number of rounds for a network of the given diameter. Constant names
    /// missing from `constants` only fail once `constants` is non-empty.
    pub fn resolve(&self, diameter: u32, constants: &BTreeMap<String, LocalValue>) -> Result<Option<u32>, CheckError> {
        let Horizon::Rounds(text) = self else {
            return Ok(None);
        };
        let bad = || CheckError::Horizon(text.clone());
        let mut total: i64 = 0;
        for term in text.split('+').map(str::trim) {
            let value = if term == "D" {
                diameter as i64
            } else if let Some(k) = term.strip_suffix("*D") {
                k.trim().parse::<i64>().map_err(|_| bad())? * diameter as i64
            } else if let Ok(n) = term.parse::<i64>() {
                n
            } else if !term.is_empty() && term.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                match constants.get(term).and_then(LocalValue::as_num) {
                    Some(n) => n as i64,
                    None if constants.is_empty() => 0,
                    None => return Err(CheckError::MissingConstant(term.to_string())),
                }
            } else {
                return Err(bad());
            };
            total += value;
        }
        u32::try_from(total).map(Some).map_err(|_| bad())
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("malformed horizon '{0}'")]
    Horizon(String),
    #[error("constant {0} is required")]
    MissingConstant(String),
    #[error("horizon of {horizon} rounds exceeds the {fires} rounds device {device} ran")]
    HorizonExceedsTrace { device: u32, horizon: u32, fires: usize },
    #[error("the network is disconnected, so its diameter is undefined")]
    Disconnected,
    #[error("{0}")]
    Setup(String),
    #[error("{0}")]
    Parse(#[from] ParseErrors),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Event(#[from] EventError),
}

#[derive(Debug, Clone, PartialEq)]
enum Expected {
    Value(LocalValue),
    Invariant(Result<(), String>),
    Skip,
}

impl Expected {
    fn matches(&self, actual: Option<&Value>) -> bool {
        match (self, actual) {
            (Expected::Skip, _) => true,
            (_, None) => false,
            (Expected::Value(v), Some(Value::Local(a))) => local_equal(v, a),
            (Expected::Value(_), Some(Value::Field(_))) => false,
            (Expected::Invariant(r), Some(_)) => r.is_ok(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Expected::Value(v) => encode_value(&Value::Local(v.clone())),
            Expected::Invariant(Ok(())) => "invariants hold".into(),
            Expected::Invariant(Err(e)) => e.clone(),
            Expected::Skip => "-".into(),
        }
    }
}

fn describe_actual(v: Option<&Value>) -> String {
    v.map(encode_value).unwrap_or_else(|| "failed".into())
}

/// One device's comparison at its reported event.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub device: DeviceId,
    pub event: EventId,
    pub time: f64,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub event: EventId,
    pub device: DeviceId,
    pub time: f64,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub seed: u64,
    /// Resolved horizon in rounds; `None` when every event is compared.
    pub horizon: Option<u32>,
    pub rows: Vec<CheckRow>,
    pub checked: usize,
    pub mismatches: usize,
    pub first_divergence: Option<Divergence>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }

    pub fn render(&self, format: TraceFormat) -> String {
        let mut out = String::new();
        match format {
            TraceFormat::Records => {
                for (i, r) in self.rows.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{}\tcheck\t{}\t{:.6}\t{} expected={} actual={} {}",
                        i,
                        r.device.0,
                        r.time,
                        r.event,
                        r.expected,
                        r.actual,
                        if r.ok { "ok" } else { "mismatch" }
                    );
                }
                let first = self
                    .first_divergence
                    .as_ref()
                    .map(|d| {
                        format!(
                            " first={} device={} expected={} actual={}",
                            d.event, d.device.0, d.expected, d.actual
                        )
                    })
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{}\tverdict\t-\t-\t{} {} checked={} mismatches={}{}",
                    self.rows.len(),
                    self.name,
                    if self.passed() { "pass" } else { "fail" },
                    self.checked,
                    self.mismatches,
                    first
                );
            }
            TraceFormat::Text => {
                let _ = writeln!(out, "{}", self);
            }
        }
        out
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let horizon = match self.horizon {
            Some(h) => format!("from round {}", h),
            None => "at every event".into(),
        };
        writeln!(f, "check {} (seed {}), compared {}", self.name, self.seed, horizon)?;
        for r in &self.rows {
            writeln!(
                f,
                "  device {:>3} {} t={:.3}: expected {} actual {}{}",
                r.device.0,
                r.event,
                r.time,
                r.expected,
                r.actual,
                if r.ok { "" } else { "  <-- mismatch" }
            )?;
        }
        write!(
            f,
            "{}: {} of {} comparisons mismatched",
            if self.passed() { "PASS" } else { "FAIL" },
            self.mismatches,
            self.checked
        )?;
        if let Some(d) = &self.first_divergence {
            write!(
                f,
                "\nfirst divergence at {} (device {}, t={:.3}): expected {}, actual {}",
                d.event, d.device.0, d.time, d.expected, d.actual
            )?;
        }
        Ok(())
    }
}

/// Inputs shared by the oracles.
struct Inputs<'a> {
    result: &'a SimulationResult,
    constants: BTreeMap<String, LocalValue>,
}

fn is_true(v: &LocalValue) -> bool {
    local_equal(v, &LocalValue::Bool(true))
}

impl Inputs<'_> {
    fn sensor(&self, d: DeviceId, name: &str) -> LocalValue {
        self.result.devices[&d]
            .sensors
            .get(name)
            .cloned()
            .unwrap_or(LocalValue::Null)
    }

    fn event_sensor(&self, e: EventId, name: &str) -> LocalValue {
        self.result.events.events[e.0 as usize]
            .sensors
            .get(name)
            .cloned()
            .unwrap_or(LocalValue::Null)
    }

    fn devices(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.result.devices.keys().copied()
    }

    fn holders(&self, name: &str) -> BTreeSet<DeviceId> {
        self.devices().filter(|d| is_true(&self.sensor(*d, name))).collect()
    }

    fn constant(&self, name: &str) -> Result<f64, CheckError> {
        self.constants
            .get(name)
            .and_then(LocalValue::as_num)
            .ok_or_else(|| CheckError::MissingConstant(name.to_string()))
    }

    fn single(&self, name: &str) -> Result<DeviceId, CheckError> {
        let h = self.holders(name);
        match h.len() {
            1 => Ok(*h.iter().next().unwrap()),
            n => Err(CheckError::Setup(format!(
                "exactly one device must sense {}, found {}",
                name, n
            ))),
        }
    }

    fn location(&self, d: DeviceId) -> u32 {
        self.result.devices[&d].location
    }

    fn local_preds(&self, e: EventId) -> Vec<EventId> {
        let es = &self.result.events;
        let here = self.location(es.events[e.0 as usize].device);
        es.predecessors(e)
            .iter()
            .copied()
            .filter(|p| self.location(es.events[p.0 as usize].device) == here)
            .collect()
    }
}

fn status(w: f64, minw: f64, maxw: f64) -> LocalValue {
    LocalValue::symbol(if w > maxw {
        "HIGH"
    } else if w < minw {
        "LOW"
    } else {
        "OK"
    })
}

fn horizon_expectations(kind: OracleKind, inp: &Inputs) -> Result<BTreeMap<DeviceId, Expected>, CheckError> {
    let g = &inp.result.graph;
    let num = LocalValue::Num;
    let mut out = BTreeMap::new();
    match kind {
        OracleKind::Bfs => {
            for (d, v) in oracle_bfs(g, &inp.holders("source")) {
                out.insert(d, Expected::Value(num(v)));
            }
        }
        OracleKind::Broadcast => {
            let sources = inp.holders("source");
            let dist = oracle_bfs(g, &sources);
            let per_source: Vec<_> = sources
                .iter()
                .map(|s| (*s, oracle_bfs(g, &BTreeSet::from([*s]))))
                .collect();
            for d in inp.devices() {
                if dist[&d].is_infinite() {
                    out.insert(d, Expected::Skip);
                    continue;
                }
                let mut best: Option<LocalValue> = None;
                for (s, ds) in &per_source {
                    if ds[&d] == dist[&d] {
                        let v = inp.sensor(*s, "value");
                        let smaller = match &best {
                            None => true,
                            Some(b) => compare(&v, b).map_err(|e| CheckError::Setup(e.to_string()))?.is_lt(),
                        };
                        if smaller {
                            best = Some(v);
                        }
                    }
                }
                out.insert(d, Expected::Value(best.unwrap()));
            }
        }
        OracleKind::Everywhere | OracleKind::Somewhere => {
            for d in inp.devices() {
                out.insert(d, Expected::Skip);
            }
            for s in inp.holders("source") {
                let mut props = component(g, s).into_iter().map(|d| is_true(&inp.sensor(d, "ok")));
                let v = if kind == OracleKind::Everywhere {
                    props.all(|b| b)
                } else {
                    props.any(|b| b)
                };
                out.insert(s, Expected::Value(LocalValue::Bool(v)));
            }
        }
        OracleKind::RemoteLights => {
            let controllers: Vec<_> = inp
                .devices()
                .filter(|d| inp.sensor(*d, "lights") != LocalValue::Null)
                .collect();
            for d in inp.devices() {
                let lights = inp.sensor(d, "lights");
                let e = if lights == LocalValue::Null {
                    Expected::Value(LocalValue::Bool(true))
                } else if controllers.len() == 1 {
                    let people = component(g, d).into_iter().any(|x| is_true(&inp.sensor(x, "people")));
                    Expected::Value(LocalValue::Bool(local_equal(&lights, &LocalValue::Bool(people))))
                } else {
                    Expected::Skip
                };
                out.insert(d, e);
            }
        }
        OracleKind::RemoteEvacuation => {
            let threshold = inp.constant("THRESHOLD")?;
            let stereos: Vec<_> = inp
                .devices()
                .filter(|d| inp.sensor(*d, "level").as_num() != Some(0.0))
                .collect();
            for d in inp.devices() {
                let level = inp.sensor(d, "level").as_num().unwrap_or(f64::NAN);
                let e = if level <= threshold {
                    Expected::Value(LocalValue::Bool(true))
                } else if stereos == [d] {
                    let all = component(g, d)
                        .into_iter()
                        .all(|x| !local_equal(&inp.sensor(x, "alert"), &LocalValue::Bool(false)));
                    Expected::Value(LocalValue::Bool(all))
                } else {
                    Expected::Skip
                };
                out.insert(d, e);
            }
        }
        OracleKind::Ellipse | OracleKind::Channel => {
            let source = inp.single("source")?;
            let dest = inp.single("dest")?;
            let ds = oracle_bfs(g, &BTreeSet::from([source]));
            let dd = oracle_bfs(g, &BTreeSet::from([dest]));
            let inside = oracle_ellipse(&ds, &dd, ds[&dest], inp.constant("WIDTH")?);
            for d in inp.devices() {
                let member = inside.contains(&d);
                let v = match kind {
                    OracleKind::Ellipse => LocalValue::Bool(member),
                    _ if member => inp.sensor(source, "value"),
                    _ => inp.sensor(d, "value"),
                };
                out.insert(d, Expected::Value(v));
            }
        }
        OracleKind::Samevalue | OracleKind::Monitor => {
            let ds = oracle_bfs(g, &inp.holders("source"));
            let dd = oracle_bfs(g, &inp.holders("dest"));
            let as_values = |m: &BTreeMap<DeviceId, f64>| -> BTreeMap<DeviceId, LocalValue> {
                m.iter().map(|(d, v)| (*d, num(*v))).collect()
            };
            let (vs, vd) = (as_values(&ds), as_values(&dd));
            let limits = if kind == OracleKind::Monitor {
                Some((inp.constant("MINW")?, inp.constant("MAXW")?))
            } else {
                None
            };
            for d in inp.devices() {
                let by_source = oracle_same_value_component(g, &vs, d) as f64;
                let v = match limits {
                    None => num(by_source),
                    Some((minw, maxw)) => {
                        let by_dest = oracle_same_value_component(g, &vd, d) as f64;
                        status(by_source.min(by_dest), minw, maxw)
                    }
                };
                out.insert(d, Expected::Value(v));
            }
        }
        OracleKind::Parity => {
            for d in inp.devices() {
                let same = g.neighbours(d).filter(|n| n.0 % 2 == d.0 % 2).count();
                out.insert(d, Expected::Value(num(same as f64)));
            }
        }
        other => return Err(CheckError::Setup(format!("{:?} is checked at every event", other))),
    }
    Ok(out)
}

/// Every `elliptic-channel` call in the tree ran with a width in `[1, maxw]`.
pub fn adjusting_width_bounded(tree: &ValueTree, maxw: f64) -> Result<(), String> {
    for ec in tree.frames("elliptic-channel") {
        let width = ec
            .children
            .get(2)
            .and_then(|c| c.value.as_local())
            .and_then(LocalValue::as_num);
        match width {
            Some(w) if (1.0..=maxw).contains(&w) => {}
            Some(w) => return Err(format!("width {} outside [1, {}]", w, maxw)),
            None => return Err("width is not a number".into()),
        }
    }
    Ok(())
}

/// Every `monitor` call in the tree returned the threshold verdict on the
/// smaller of its two `samevalue` estimates.
pub fn adjusting_status_consistent(tree: &ValueTree, minw: f64, maxw: f64) -> Result<(), String> {
    for m in tree.frames("monitor") {
        let estimates: Vec<f64> = m
            .frames("samevalue")
            .iter()
            .filter_map(|s| s.value.as_local().and_then(LocalValue::as_num))
            .collect();
        if estimates.len() != 2 {
            return Err(format!("monitor saw {} samevalue estimates", estimates.len()));
        }
        let want = status(estimates[0].min(estimates[1]), minw, maxw);
        match m.value.as_local() {
            Some(s) if local_equal(s, &want) => {}
            other => {
                return Err(format!(
                    "status {} for estimates {:?}, expected {}",
                    other.map(|s| s.to_string()).unwrap_or_default(),
                    estimates,
                    want
                ))
            }
        }
    }
    Ok(())
}

fn event_expectations(kind: OracleKind, inp: &Inputs) -> Result<Vec<Expected>, CheckError> {
    let es = &inp.result.events;
    let n = es.len();
    let mut out = Vec::with_capacity(n);
    match kind {
        OracleKind::LongestChain => {
            out.extend(
                oracle_longest_chain(es)?
                    .into_iter()
                    .map(|v| Expected::Value(LocalValue::Num(v))),
            );
        }
        OracleKind::Lights => {
            for e in es.ids() {
                let lights = inp.event_sensor(e, "lights");
                if lights == LocalValue::Null {
                    out.push(Expected::Value(LocalValue::Bool(true)));
                    continue;
                }
                let people = std::iter::once(e)
                    .chain(inp.local_preds(e))
                    .any(|x| is_true(&inp.event_sensor(x, "people")));
                out.push(Expected::Value(LocalValue::Bool(local_equal(
                    &lights,
                    &LocalValue::Bool(people),
                ))));
            }
        }
        OracleKind::Stereo => {
            let threshold = inp.constant("THRESHOLD")?;
            let delay = inp.constant("DELAY")?;
            let holds = |e: EventId| {
                let agreed = std::iter::once(e)
                    .chain(inp.local_preds(e))
                    .all(|x| !local_equal(&inp.event_sensor(x, "alert"), &LocalValue::Bool(false)));
                let quiet = inp.event_sensor(e, "level").as_num().is_some_and(|l| l <= threshold);
                agreed || quiet
            };
            let counts = replay_roundsince(es, holds);
            for e in es.ids() {
                out.push(match counts.get(&e) {
                    Some(c) => Expected::Value(LocalValue::Bool((*c as f64) < delay)),
                    None => Expected::Value(LocalValue::Null),
                });
            }
        }
        OracleKind::Evacuation => {
            for e in es.ids() {
                let ev = &es.events[e.0 as usize];
                let here = inp.result.devices[&ev.device].position;
                let heading = inp.event_sensor(e, "direction").as_vec2();
                let Some(heading) = heading else {
                    out.push(Expected::Skip);
                    continue;
                };
                let violation = es.predecessors(e).iter().any(|p| {
                    let other = es.events[p.0 as usize].device;
                    let there = inp.result.devices[&other].position;
                    inp.event_sensor(*p, "direction")
                        .as_vec2()
                        .is_some_and(|h| collision_course(here, heading, there, h))
                });
                out.push(Expected::Value(LocalValue::Bool(!violation)));
            }
        }
        OracleKind::Adjusting => {
            let minw = inp.constant("MINW")?;
            let maxw = inp.constant("MAXW")?;
            for e in es.ids() {
                out.push(match inp.result.exports.get(e.0 as usize).and_then(|t| t.as_ref()) {
                    Some(tree) => Expected::Invariant(
                        adjusting_status_consistent(tree, minw, maxw)
                            .and_then(|()| adjusting_width_bounded(tree, maxw)),
                    ),
                    None => Expected::Invariant(Err("round failed".into())),
                });
            }
        }
        other => return Err(CheckError::Setup(format!("{:?} is checked at a horizon", other))),
    }
    Ok(out)
}

/// Compare a finished run against the entry's oracle.
pub fn check_stabilized(
    result: &SimulationResult,
    entry: &CorpusEntry,
    scenario: &ScenarioConfig,
) -> Result<CheckReport, CheckError> {
    let inp = Inputs {
        result,
        constants: scenario.constants_map(),
    };
    let es = &result.events;
    let mut rows = Vec::new();
    let mut checked = 0;
    let mut mismatches = 0;
    let mut first: Option<Divergence> = None;
    let mut note = |e: EventId, expected: &Expected, rows: &mut Vec<CheckRow>, report: bool| {
        let actual = es.value(e);
        let ev = &es.events[e.0 as usize];
        let ok = expected.matches(actual);
        if !matches!(expected, Expected::Skip) {
            checked += 1;
        }
        if !ok {
            mismatches += 1;
            if first.as_ref().is_none_or(|f| e < f.event) {
                first = Some(Divergence {
                    event: e,
                    device: ev.device,
                    time: ev.time,
                    expected: expected.describe(),
                    actual: describe_actual(actual),
                });
            }
        }
        if report && !matches!(expected, Expected::Skip) {
            rows.push(CheckRow {
                device: ev.device,
                event: e,
                time: ev.time,
                expected: expected.describe(),
                actual: describe_actual(actual),
                ok,
            });
        }
    };

    let horizon = match &entry.meta.horizon {
        Horizon::EveryEvent => None,
        h => {
            let diameter = result.graph.diameter().ok_or(CheckError::Disconnected)?;
            h.resolve(diameter, &inp.constants)?
        }
    };
    match horizon {
        None => {
            let expected = event_expectations(entry.meta.oracle, &inp)?;
            let mut last: BTreeMap<DeviceId, EventId> = BTreeMap::new();
            for e in es.ids() {
                last.insert(es.events[e.0 as usize].device, e);
            }
            let reported: BTreeSet<EventId> = last.values().copied().collect();
            for e in es.ids() {
                note(e, &expected[e.0 as usize], &mut rows, reported.contains(&e));
            }
        }
        Some(h) => {
            let expected = horizon_expectations(entry.meta.oracle, &inp)?;
            for (d, exp) in &expected {
                let events = es.device_events(*d);
                if matches!(exp, Expected::Skip) {
                    continue;
                }
                if (events.len() as u32) < h.max(1) {
                    return Err(CheckError::HorizonExceedsTrace {
                        device: d.0,
                        horizon: h,
                        fires: events.len(),
                    });
                }
                for (i, e) in events.iter().enumerate().skip(h.max(1) as usize - 1) {
                    note(*e, exp, &mut rows, i + 1 == h.max(1) as usize);
                }
            }
        }
    }
    rows.sort_by_key(|r| r.device);
    Ok(CheckReport {
        name: entry.name.clone(),
        seed: scenario.seed,
        horizon,
        rows,
        checked,
        mismatches,
        first_divergence: first,
    })
}

/// Load the entry's program against `scenario`'s constants, simulate it and
/// check the outcome.
pub fn check_entry(
    entry: &CorpusEntry,
    scenario: &ScenarioConfig,
) -> Result<(SimulationResult, CheckReport), CheckError> {
    let program = entry.program(&scenario.constants_map())?;
    let result = run(&program, scenario)?;
    let report = check_stabilized(&result, entry, scenario)?;
    Ok((result, report))
}
