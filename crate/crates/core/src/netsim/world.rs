use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::events::{EventId, EventStructure};
use super::scenario::{DelaySpec, EnvAction, EnvKind, LocationMode, PolicySpec, ScenarioConfig, ScenarioError};
use super::topology::{Graph, Topology};
use super::trace::{RecordKind, Trace};
use crate::eval::{EvalOptions, Evaluator, LocationId, Point, Received, RoundContext};
use crate::lang::Program;
use crate::value::{encode_value, trees_equal, DeviceId, LocalValue, Value, ValueTree};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown device {0}")]
    UnknownDevice(u32),
    #[error("device {0} is not alive")]
    Dead(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WakePolicy {
    Periodic,
    Reactive { min_span: f64 },
}

/// A mailbox slot: the newest export from one neighbour.
#[derive(Debug, Clone)]
pub struct MailboxEntry {
    pub received: Received,
    pub sender_event: EventId,
}

#[derive(Debug, Clone)]
pub struct DeviceState {
    pub id: DeviceId,
    pub location: LocationId,
    pub period: f64,
    pub jitter: f64,
    pub policy: WakePolicy,
    /// Local clock minus global clock.
    pub skew: f64,
    pub ttl: f64,
    pub mailbox: BTreeMap<DeviceId, MailboxEntry>,
    pub sensors: BTreeMap<String, LocalValue>,
    pub previous: Option<Arc<ValueTree>>,
    pub last_value: Option<Value>,
    pub alive: bool,
    pub fires: u32,
    pub last_fire: Option<f64>,
    pending: Option<f64>,
    generation: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    Env(usize),
    Delivery {
        to: DeviceId,
        from: DeviceId,
        event: EventId,
        tree: Arc<ValueTree>,
    },
    Fire {
        device: DeviceId,
        generation: u64,
    },
}

impl Action {
    fn rank(&self) -> u8 {
        match self {
            Action::Env(_) => 0,
            Action::Delivery { .. } => 1,
            Action::Fire { .. } => 2,
        }
    }

    fn device(&self) -> u32 {
        match self {
            Action::Env(_) => 0,
            Action::Delivery { to, .. } => to.0,
            Action::Fire { device, .. } => device.0,
        }
    }
}

#[derive(Debug)]
struct Queued {
    time: f64,
    seq: u64,
    action: Action,
}

impl Queued {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.action.rank().cmp(&other.action.rank()))
            .then(self.action.device().cmp(&other.action.device()))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Reversed so the max-heap pops the earliest action.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// What one call to [`World::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Fired(EventId),
    Delivered { to: DeviceId, from: DeviceId },
    Dropped { to: DeviceId, from: DeviceId },
    Env(usize),
    Skipped,
}

/// Final per-device state after a run.
#[derive(Debug, Clone)]
pub struct DeviceSnapshot {
    pub value: Option<Value>,
    pub state: Option<Arc<ValueTree>>,
    pub fires: u32,
    pub alive: bool,
    pub position: Point,
    pub location: LocationId,
    pub sensors: BTreeMap<String, LocalValue>,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trace: Trace,
    pub events: EventStructure,
    /// Broadcast tree of every event (absent for failed rounds).
    pub exports: Vec<Option<Arc<ValueTree>>>,
    pub devices: BTreeMap<DeviceId, DeviceSnapshot>,
    /// The topology at the end of the run.
    pub graph: Graph,
}

impl SimulationResult {
    /// Root value at each device's last successful round.
    pub fn final_values(&self) -> BTreeMap<DeviceId, Value> {
        self.devices
            .iter()
            .filter_map(|(d, s)| s.value.clone().map(|v| (*d, v)))
            .collect()
    }
}

/// The simulated network: devices, topology, transport and the event loop.
pub struct World {
    evaluator: Evaluator,
    devices: Vec<DeviceState>,
    topology: Topology,
    queue: BinaryHeap<Queued>,
    seq: u64,
    clock: f64,
    rng: ChaCha8Rng,
    env: Vec<EnvAction>,
    loss: f64,
    delay: Option<DelaySpec>,
    rounds: Option<u32>,
    until: Option<f64>,
    constants: BTreeMap<String, LocalValue>,
    events: EventStructure,
    exports: Vec<Option<Arc<ValueTree>>>,
    trace: Trace,
}

impl World {
    /// Build the initial world. `program` should already be desugared with
    /// constants resolved, as [`crate::lang::load_program`] does.
    pub fn new(program: &Program, config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let topology = Topology::from_spec(&config.topology, &mut rng)?;
        let n = topology.len() as u32;
        let sched = &config.schedule;
        let overrides: BTreeMap<u32, _> = sched.devices.iter().map(|d| (d.id, d)).collect();

        let mut max_period: f64 = 0.0;
        let mut devices = Vec::with_capacity(n as usize);
        let mut starts = Vec::with_capacity(n as usize);
        for i in 0..n {
            let o = overrides.get(&i);
            let period = o.and_then(|o| o.period).unwrap_or(sched.period);
            let policy = match o.and_then(|o| o.policy).unwrap_or(sched.policy) {
                PolicySpec::Periodic => WakePolicy::Periodic,
                PolicySpec::Reactive => WakePolicy::Reactive {
                    min_span: o.and_then(|o| o.min_span).unwrap_or(sched.min_span),
                },
            };
            max_period = max_period.max(period);
            let location = match config.locations.mode {
                LocationMode::Single => 0,
                LocationMode::Distinct => i,
                LocationMode::Groups => config
                    .locations
                    .groups
                    .iter()
                    .position(|g| g.contains(&i))
                    .map(|k| k as u32)
                    .unwrap_or(config.locations.default),
            };
            let mut sensors = BTreeMap::new();
            for (name, spec) in &config.sensors {
                let v = spec.devices.get(&i.to_string()).unwrap_or(&spec.default);
                sensors.insert(name.clone(), v.0.clone());
            }
            let offset = o.and_then(|o| o.offset).unwrap_or(sched.offset);
            let spread = if sched.start_spread > 0.0 {
                rng.gen_range(0.0..sched.start_spread)
            } else {
                0.0
            };
            starts.push(offset + spread);
            devices.push(DeviceState {
                id: DeviceId(i),
                location,
                period,
                jitter: o.and_then(|o| o.jitter).unwrap_or(sched.jitter),
                policy,
                skew: o.and_then(|o| o.skew).unwrap_or(sched.skew),
                ttl: 0.0,
                mailbox: BTreeMap::new(),
                sensors,
                previous: None,
                last_value: None,
                alive: true,
                fires: 0,
                last_fire: None,
                pending: None,
                generation: 0,
            });
        }
        let ttl = config.link.ttl.unwrap_or(2.5 * max_period);
        for d in &mut devices {
            d.ttl = ttl;
        }

        let mut env = config.env.clone();
        for (name, spec) in &config.sensors {
            for c in &spec.changes {
                env.push(EnvAction {
                    time: c.time,
                    kind: EnvKind::Sense {
                        sensor: name.clone(),
                        device: c.device,
                        value: c.value.clone(),
                    },
                });
            }
        }
        env.sort_by(|a, b| a.time.total_cmp(&b.time));

        let mut world = World {
            evaluator: Evaluator::new(
                program,
                EvalOptions {
                    export_view: config.export_view,
                    ..EvalOptions::default()
                },
            ),
            devices,
            topology,
            queue: BinaryHeap::new(),
            seq: 0,
            clock: 0.0,
            rng,
            env,
            loss: config.link.loss,
            delay: config.link.delay.clone(),
            rounds: config.rounds,
            until: config.until,
            constants: config.constants_map(),
            events: EventStructure::new(),
            exports: Vec::new(),
            trace: Trace::default(),
        };
        for i in 0..world.env.len() {
            let t = world.env[i].time;
            world.enqueue(t, Action::Env(i));
        }
        for (i, t) in starts.into_iter().enumerate() {
            world.schedule_fire(DeviceId(i as u32), t);
        }
        Ok(world)
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn device(&self, id: DeviceId) -> Result<&DeviceState, SimError> {
        self.devices.get(id.0 as usize).ok_or(SimError::UnknownDevice(id.0))
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn events(&self) -> &EventStructure {
        &self.events
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Current topology neighbours of an alive device.
    pub fn neighbours(&self, id: DeviceId) -> Result<Vec<DeviceId>, SimError> {
        if !self.device(id)?.alive {
            return Err(SimError::Dead(id.0));
        }
        Ok(self.topology.neighbours(id))
    }

    fn enqueue(&mut self, time: f64, action: Action) {
        self.seq += 1;
        self.queue.push(Queued {
            time,
            seq: self.seq,
            action,
        });
    }

    fn schedule_fire(&mut self, id: DeviceId, time: f64) {
        let d = &mut self.devices[id.0 as usize];
        if !d.alive || self.rounds.is_some_and(|r| d.fires >= r) {
            return;
        }
        if let Some(p) = d.pending {
            if p <= time {
                return;
            }
        }
        d.generation += 1;
        d.pending = Some(time);
        let generation = d.generation;
        self.enqueue(time, Action::Fire { device: id, generation });
    }

    fn wake(&mut self, id: DeviceId) {
        let d = &self.devices[id.0 as usize];
        if let WakePolicy::Reactive { min_span } = d.policy {
            if d.alive && d.pending.is_none() {
                let at = d.last_fire.map_or(self.clock, |l| (l + min_span).max(self.clock));
                self.schedule_fire(id, at);
            }
        }
    }

    /// Run the next pending action. `None` once the queue is exhausted or
    /// the next action lies beyond the time bound.
    pub fn step(&mut self) -> Option<StepOutcome> {
        let next = self.queue.peek()?;
        if self.until.is_some_and(|u| next.time > u) {
            return None;
        }
        let Queued { time, action, .. } = self.queue.pop()?;
        self.clock = self.clock.max(time);
        Some(match action {
            Action::Env(i) => {
                self.apply_env(i);
                StepOutcome::Env(i)
            }
            Action::Delivery { to, from, event, tree } => self.deliver(to, from, event, tree),
            Action::Fire { device, generation } => {
                let d = &self.devices[device.0 as usize];
                if !d.alive || d.generation != generation {
                    StepOutcome::Skipped
                } else {
                    self.devices[device.0 as usize].pending = None;
                    let e = self.fire_now(device);
                    if self.devices[device.0 as usize].policy == WakePolicy::Periodic {
                        let d = &self.devices[device.0 as usize];
                        let (period, jitter) = (d.period, d.jitter);
                        let wobble = if jitter > 0.0 {
                            self.rng.gen_range(-jitter..jitter)
                        } else {
                            0.0
                        };
                        let at = self.clock + period + wobble;
                        self.schedule_fire(device, at);
                    }
                    StepOutcome::Fired(e)
                }
            }
        })
    }

    /// Fire a device immediately at the current clock, outside its schedule.
    pub fn fire(&mut self, id: DeviceId) -> Result<EventId, SimError> {
        if !self.device(id)?.alive {
            return Err(SimError::Dead(id.0));
        }
        Ok(self.fire_now(id))
    }

    fn fire_now(&mut self, id: DeviceId) -> EventId {
        let now = self.clock;
        let idx = id.0 as usize;
        let ttl = self.devices[idx].ttl;
        self.devices[idx]
            .mailbox
            .retain(|_, m| now - m.received.received_at <= ttl);

        let d = &self.devices[idx];
        let local_time = now + d.skew;
        let mut ctx = RoundContext::new(id);
        ctx.time = local_time;
        ctx.sensors = d.sensors.clone();
        ctx.previous = d.previous.clone();
        ctx.constants = self.constants.clone();
        ctx.location_of.insert(id, d.location);
        ctx.position_of.insert(id, self.topology.position(id));
        let mut preds = Vec::with_capacity(d.mailbox.len());
        for (sender, m) in &d.mailbox {
            ctx.neighbour_exports.insert(*sender, m.received.clone());
            ctx.location_of
                .insert(*sender, self.devices[sender.0 as usize].location);
            ctx.position_of.insert(*sender, self.topology.position(*sender));
            preds.push(m.sender_event);
        }
        let sensors = d.sensors.clone();

        let outcome = self.evaluator.eval_round(&ctx);
        let d = &mut self.devices[idx];
        d.fires += 1;
        d.last_fire = Some(now);
        match outcome {
            Ok(export) => {
                let root = export.root().clone();
                d.previous = Some(export.state.clone());
                d.last_value = Some(root.clone());
                let e = self.events.push(id, local_time, sensors, Some(root.clone()), preds);
                self.exports.push(Some(export.broadcast.clone()));
                self.trace.push(
                    RecordKind::Fire,
                    Some(id),
                    local_time,
                    Some(e),
                    format!("{} {}", e, encode_value(&root)),
                );
                self.broadcast(id, e, export.broadcast);
                e
            }
            Err(err) => {
                let e = self.events.push(id, local_time, sensors, None, preds);
                self.exports.push(None);
                self.trace.push(
                    RecordKind::Fail,
                    Some(id),
                    local_time,
                    Some(e),
                    format!("{} {}", e, err),
                );
                e
            }
        }
    }

    fn broadcast(&mut self, from: DeviceId, event: EventId, tree: Arc<ValueTree>) {
        let period = self.devices[from.0 as usize].period;
        for to in self.topology.neighbours(from) {
            if !self.devices[to.0 as usize].alive {
                continue;
            }
            if self.loss > 0.0 && self.rng.gen::<f64>() < self.loss {
                continue;
            }
            let delay = match self.delay {
                None => 0.1 * period,
                Some(DelaySpec::Fixed(d)) => d,
                Some(DelaySpec::Uniform { min, max }) if max > min => self.rng.gen_range(min..max),
                Some(DelaySpec::Uniform { min, .. }) => min,
            };
            let at = self.clock + delay;
            self.enqueue(
                at,
                Action::Delivery {
                    to,
                    from,
                    event,
                    tree: tree.clone(),
                },
            );
        }
    }

    fn deliver(&mut self, to: DeviceId, from: DeviceId, event: EventId, tree: Arc<ValueTree>) -> StepOutcome {
        let now = self.clock;
        let d = &mut self.devices[to.0 as usize];
        if !d.alive {
            return StepOutcome::Dropped { to, from };
        }
        if d.mailbox.get(&from).is_some_and(|m| m.sender_event > event) {
            return StepOutcome::Dropped { to, from };
        }
        let changed = d
            .mailbox
            .get(&from)
            .is_none_or(|m| !trees_equal(&m.received.tree, &tree));
        d.mailbox.insert(
            from,
            MailboxEntry {
                received: Received { tree, received_at: now },
                sender_event: event,
            },
        );
        let local = now + d.skew;
        self.trace.push(
            RecordKind::Delivery,
            Some(to),
            local,
            None,
            format!("from {} {}", from.0, event),
        );
        if changed {
            self.wake(to);
        }
        StepOutcome::Delivered { to, from }
    }

    fn apply_env(&mut self, i: usize) {
        let action = self.env[i].kind.clone();
        let now = self.clock;
        let describe;
        match action {
            EnvKind::Kill { device } => {
                let d = &mut self.devices[device as usize];
                d.alive = false;
                d.pending = None;
                d.generation += 1;
                describe = format!("kill {}", device);
            }
            EnvKind::Revive { device } => {
                let d = &mut self.devices[device as usize];
                if !d.alive {
                    d.alive = true;
                    d.previous = None;
                    d.last_value = None;
                    d.mailbox.clear();
                    d.pending = None;
                    d.last_fire = None;
                    self.schedule_fire(DeviceId(device), now);
                }
                describe = format!("revive {}", device);
            }
            EnvKind::AddEdge { a, b } => {
                self.topology.add_edge(DeviceId(a), DeviceId(b));
                describe = format!("add-edge {} {}", a, b);
            }
            EnvKind::RemoveEdge { a, b } => {
                self.topology.remove_edge(DeviceId(a), DeviceId(b));
                describe = format!("remove-edge {} {}", a, b);
            }
            EnvKind::Move { device, x, y } => {
                self.topology.move_device(DeviceId(device), (x, y));
                describe = format!("move {} {} {}", device, x, y);
            }
            EnvKind::Sense { sensor, device, value } => {
                let targets: Vec<u32> = match device {
                    Some(d) => vec![d],
                    None => (0..self.devices.len() as u32).collect(),
                };
                for t in &targets {
                    self.devices[*t as usize]
                        .sensors
                        .insert(sensor.clone(), value.0.clone());
                }
                for t in targets {
                    self.wake(DeviceId(t));
                }
                describe = match device {
                    Some(d) => format!("sense {} {} {}", sensor, d, value.0),
                    None => format!("sense {} * {}", sensor, value.0),
                };
            }
        }
        self.trace.push(RecordKind::Env, None, now, None, describe);
    }

    /// Step until the stop condition holds.
    pub fn run_to_end(&mut self) {
        while self.step().is_some() {}
    }

    pub fn into_result(self) -> SimulationResult {
        let graph = self.topology.graph();
        let devices = self
            .devices
            .iter()
            .map(|d| {
                (
                    d.id,
                    DeviceSnapshot {
                        value: d.last_value.clone(),
                        state: d.previous.clone(),
                        fires: d.fires,
                        alive: d.alive,
                        position: self.topology.position(d.id),
                        location: d.location,
                        sensors: d.sensors.clone(),
                    },
                )
            })
            .collect();
        SimulationResult {
            trace: self.trace,
            events: self.events,
            exports: self.exports,
            devices,
            graph,
        }
    }
}

/// Simulate `program` under `config` until the stop condition.
pub fn run(program: &Program, config: &ScenarioConfig) -> Result<SimulationResult, SimError> {
    let mut world = World::new(program, config)?;
    world.run_to_end();
    Ok(world.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_program;
    use crate::netsim::scenario::TopologySpec;

    fn program(src: &str) -> Program {
        load_program(src, &BTreeMap::new()).unwrap()
    }

    fn line(n: u32) -> TopologySpec {
        TopologySpec::Edges {
            devices: n,
            edges: (1..n).map(|i| [i - 1, i]).collect(),
            positions: None,
        }
    }

    #[test]
    fn single_device_counts_without_edges() {
        let cfg = ScenarioConfig::synchronous(1, 3, line(1));
        let r = run(&program("rep (0) { (x) => x + 1 }"), &cfg).unwrap();
        let vals: Vec<_> = r.events.values.iter().map(|v| v.clone().unwrap()).collect();
        assert_eq!(
            vals,
            vec![
                Value::Local(LocalValue::Num(1.0)),
                Value::Local(LocalValue::Num(2.0)),
                Value::Local(LocalValue::Num(3.0))
            ]
        );
        assert!(r.events.edges.is_empty());
        let times: Vec<f64> = r.events.events.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn hopcount_on_a_line() {
        let src =
            "def hopcount(source) { rep (infinity) { (d) => mux(source, 0, minHood(nbr{d}) + 1) } } hopcount(source)";
        let mut cfg = ScenarioConfig::synchronous(1, 6, line(4));
        cfg.set_sensor_default("source", LocalValue::Bool(false));
        cfg.set_sensor("source", 0, LocalValue::Bool(true));
        let r = run(&program(src), &cfg).unwrap();
        let f: Vec<_> = r
            .final_values()
            .values()
            .map(|v| v.as_local().unwrap().as_num().unwrap())
            .collect();
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_network_has_empty_trace() {
        let cfg = ScenarioConfig::synchronous(1, 3, line(0));
        let r = run(&program("1"), &cfg).unwrap();
        assert!(r.trace.is_empty() && r.events.is_empty());
    }

    #[test]
    fn total_loss_means_no_edges() {
        let mut cfg = ScenarioConfig::synchronous(4, 5, line(3));
        cfg.link.loss = 1.0;
        let r = run(&program("nbr{1}"), &cfg).unwrap();
        assert!(r.events.edges.is_empty());
        assert_eq!(r.events.len(), 15);
    }

    #[test]
    fn reactive_wake_rules() {
        let mut cfg = ScenarioConfig::synchronous(1, 10, line(2));
        cfg.until = Some(20.0);
        cfg.schedule.policy = PolicySpec::Reactive;
        cfg.schedule.min_span = 1.0;
        // A constant export never wakes anyone after the initial round.
        let r = run(&program("nbr{1}"), &cfg).unwrap();
        assert_eq!(r.events.len(), 2 + 2);
        // Both see the other's first export as new, then nothing changes.
        let times: Vec<f64> = r.events.events.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn kill_and_ttl_expiry() {
        let mut cfg = ScenarioConfig::synchronous(1, 10, line(2));
        cfg.env.push(EnvAction {
            time: 2.5,
            kind: EnvKind::Kill { device: 1 },
        });
        let r = run(&program("sumHood(nbr{1})"), &cfg).unwrap();
        let dev0: Vec<f64> = r
            .events
            .device_events(DeviceId(0))
            .iter()
            .map(|e| r.events.value(*e).unwrap().as_local().unwrap().as_num().unwrap())
            .collect();
        // Device 1's last export (t=2) expires once older than 2.5.
        assert_eq!(dev0, vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.devices[&DeviceId(1)].fires, 3);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let mut cfg = ScenarioConfig::synchronous(
            9,
            8,
            TopologySpec::RandomUnitDisk {
                devices: 8,
                radius: 0.5,
                side: 1.0,
            },
        );
        cfg.link.loss = 0.3;
        cfg.schedule.jitter = 0.3;
        cfg.link.delay = Some(DelaySpec::Uniform { min: 0.0, max: 0.5 });
        let p = program("rep (0) { (v) => maxHoodPlusSelf(mux(nbr{myID()} == myID(), 0, nbr{v})) + 1 }");
        let a = run(&p, &cfg).unwrap().trace.render(Default::default());
        let b = run(&p, &cfg).unwrap().trace.render(Default::default());
        assert_eq!(a, b);
        cfg.seed = 10;
        assert_ne!(a, run(&p, &cfg).unwrap().trace.render(Default::default()));
    }

    #[test]
    fn neighbours_of_dead_device() {
        let cfg = ScenarioConfig::synchronous(1, 1, line(3));
        let mut w = World::new(&program("1"), &cfg).unwrap();
        assert_eq!(w.neighbours(DeviceId(1)).unwrap(), vec![DeviceId(0), DeviceId(2)]);
        assert!(matches!(w.neighbours(DeviceId(7)), Err(SimError::UnknownDevice(7))));
        w.devices[1].alive = false;
        assert!(matches!(w.fire(DeviceId(1)), Err(SimError::Dead(1))));
    }
}
