//! Reference computations the corpus programs are checked against. None of
//! them runs the interpreter: each works directly on graphs, sensor readings
//! or the recorded event structure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::eval::Point;
use crate::netsim::{EventError, EventId, EventStructure, Graph};
use crate::value::{local_equal, DeviceId, LocalValue};

/// Breadth-first hop distance to the nearest source; `+inf` when no source
/// is reachable.
pub fn oracle_bfs(graph: &Graph, sources: &BTreeSet<DeviceId>) -> BTreeMap<DeviceId, f64> {
    let mut dist: BTreeMap<DeviceId, f64> = graph.devices().map(|d| (d, f64::INFINITY)).collect();
    let mut queue = VecDeque::new();
    for s in sources {
        if dist.contains_key(s) {
            dist.insert(*s, 0.0);
            queue.push_back(*s);
        }
    }
    while let Some(d) = queue.pop_front() {
        let next = dist[&d] + 1.0;
        for n in graph.neighbours(d) {
            if dist[&n].is_infinite() {
                dist.insert(n, next);
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Number of events on the longest neighbour chain ending at each event,
/// the event itself included.
pub fn oracle_longest_chain(es: &EventStructure) -> Result<Vec<f64>, EventError> {
    let order = es.topological_order()?;
    let mut value = vec![0.0; es.len()];
    for e in order {
        let best = es
            .predecessors(e)
            .iter()
            .map(|p| value[p.0 as usize])
            .fold(0.0, f64::max);
        value[e.0 as usize] = best + 1.0;
    }
    Ok(value)
}

/// Size of the connected component containing `id` in the subgraph induced
/// by the devices whose value equals `id`'s.
pub fn oracle_same_value_component(graph: &Graph, values: &BTreeMap<DeviceId, LocalValue>, id: DeviceId) -> usize {
    let Some(mine) = values.get(&id) else {
        return 1;
    };
    let same = |d: &DeviceId| values.get(d).is_some_and(|v| local_equal(v, mine));
    let mut seen = BTreeSet::from([id]);
    let mut stack = vec![id];
    while let Some(d) = stack.pop() {
        for n in graph.neighbours(d) {
            if same(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len()
}

/// Devices whose summed distances to the two foci exceed the focal distance
/// by at most `width`.
pub fn oracle_ellipse(
    d_source: &BTreeMap<DeviceId, f64>,
    d_dest: &BTreeMap<DeviceId, f64>,
    d_source_dest: f64,
    width: f64,
) -> BTreeSet<DeviceId> {
    d_source
        .iter()
        .filter(|(d, ds)| {
            let dd = d_dest.get(d).copied().unwrap_or(f64::INFINITY);
            **ds + dd <= d_source_dest + width
        })
        .map(|(d, _)| *d)
        .collect()
}

/// Steady state of the `samevalue` program computed directly on the graph.
///
/// Each device points at the neighbour (or itself) with the same value and the
/// least `(count, id)`; subtree sizes are summed along those pointers; roots
/// then broadcast their sizes down `count`, with self-pointing roots at 0.
/// Unlike [`oracle_same_value_component`] this follows the program as written, so the
/// two differ wherever a slice holds more than one root or the broadcast
/// crosses into another slice.
pub fn samevalue_direct_model(
    graph: &Graph,
    values: &BTreeMap<DeviceId, LocalValue>,
    counts: &BTreeMap<DeviceId, f64>,
) -> BTreeMap<DeviceId, f64> {
    let devices: Vec<DeviceId> = graph.devices().collect();
    let key = |d: DeviceId| (counts[&d], d.0);
    let parent: BTreeMap<DeviceId, DeviceId> = devices
        .iter()
        .map(|&d| {
            let best = graph
                .neighbours(d)
                .filter(|n| local_equal(&values[n], &values[&d]))
                .fold(d, |b, n| if key(n) < key(b) { n } else { b });
            (d, best)
        })
        .collect();
    let mut size: BTreeMap<DeviceId, f64> = devices.iter().map(|d| (*d, 1.0)).collect();
    for _ in 0..=devices.len() {
        let old = size.clone();
        for &d in &devices {
            let below: f64 = graph.neighbours(d).filter(|n| parent[n] == d).map(|n| old[&n]).sum();
            size.insert(d, 1.0 + below);
        }
    }
    let gradient: BTreeMap<DeviceId, f64> = devices
        .iter()
        .map(|&d| (d, if parent[&d] == d { 0.0 } else { counts[&d] }))
        .collect();
    let mut out = size.clone();
    for _ in 0..=devices.len() {
        let old = out.clone();
        for &d in &devices {
            if gradient[&d] == 0.0 {
                out.insert(d, size[&d]);
            } else if let Some(best) = graph
                .neighbours(d)
                .map(|n| (gradient[&n], old[&n]))
                .min_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
            {
                out.insert(d, best.1);
            }
        }
    }
    out
}

/// Devices reachable from `start`, itself included.
pub fn component(graph: &Graph, start: DeviceId) -> BTreeSet<DeviceId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(d) = stack.pop() {
        for n in graph.neighbours(d) {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

/// Whether `heading` points within 60 degrees (exclusive) of `towards`.
/// Uses the cosine of the angle, so it shares no code with `angle`.
pub fn within_sixty(towards: Point, heading: Point) -> bool {
    let n1 = towards.0.hypot(towards.1);
    let n2 = heading.0.hypot(heading.1);
    if n1 == 0.0 || n2 == 0.0 {
        return false;
    }
    let cos = (towards.0 * heading.0 + towards.1 * heading.1) / (n1 * n2);
    cos > 0.5
}

/// Two agents are on a collision course when each heads within 60 degrees
/// of the other's position.
pub fn collision_course(p: Point, heading_p: Point, q: Point, heading_q: Point) -> bool {
    let pq = (q.0 - p.0, q.1 - p.1);
    let qp = (-pq.0, -pq.1);
    within_sixty(pq, heading_p) && within_sixty(qp, heading_q)
}

/// Replays `roundsince` over each device's own events: 0 where `holds`,
/// otherwise one more than at the device's previous successful event.
pub fn replay_roundsince(es: &EventStructure, holds: impl Fn(EventId) -> bool) -> BTreeMap<EventId, u32> {
    let mut last: BTreeMap<DeviceId, u32> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for e in es.ids() {
        if es.value(e).is_none() {
            continue;
        }
        let device = es.events[e.0 as usize].device;
        let count = if holds(e) {
            0
        } else {
            last.get(&device).copied().unwrap_or(0) + 1
        };
        last.insert(device, count);
        out.insert(e, count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> BTreeSet<DeviceId> {
        v.iter().map(|i| DeviceId(*i)).collect()
    }

    #[test]
    fn bfs_examples() {
        let g = Graph::line(4);
        let d: Vec<f64> = oracle_bfs(&g, &ids(&[0])).into_values().collect();
        assert_eq!(d, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(oracle_bfs(&g, &ids(&[0, 1, 2, 3])).values().all(|v| *v == 0.0));
        let g = Graph::from_edges(3, &[(0, 1)]);
        assert_eq!(oracle_bfs(&g, &ids(&[0]))[&DeviceId(2)], f64::INFINITY);
    }

    #[test]
    fn longest_chain_examples() {
        let mut es = EventStructure::new();
        let a = es.push(DeviceId(0), 0.0, BTreeMap::new(), None, vec![]);
        let b = es.push(DeviceId(1), 1.0, BTreeMap::new(), None, vec![a]);
        let c = es.push(DeviceId(2), 1.0, BTreeMap::new(), None, vec![]);
        es.push(DeviceId(0), 2.0, BTreeMap::new(), None, vec![b, c]);
        assert_eq!(oracle_longest_chain(&es).unwrap(), vec![1.0, 2.0, 1.0, 3.0]);
    }

    #[test]
    fn same_value_component_examples() {
        let g = Graph::line(3);
        let n = |x: f64| LocalValue::Num(x);
        let vals: BTreeMap<_, _> = [(DeviceId(0), n(1.0)), (DeviceId(1), n(1.0)), (DeviceId(2), n(2.0))].into();
        assert_eq!(oracle_same_value_component(&g, &vals, DeviceId(0)), 2);
        assert_eq!(oracle_same_value_component(&g, &vals, DeviceId(2)), 1);
        let g5 = Graph::line(5);
        let all: BTreeMap<_, _> = (0..5).map(|i| (DeviceId(i), n(7.0))).collect();
        assert_eq!(oracle_same_value_component(&g5, &all, DeviceId(3)), 5);
    }

    #[test]
    fn ellipse_examples() {
        let g = Graph::line(5);
        let ds = oracle_bfs(&g, &ids(&[0]));
        let dd = oracle_bfs(&g, &ids(&[4]));
        assert_eq!(oracle_ellipse(&ds, &dd, 4.0, 0.0).len(), 5);
        // Same focus twice: the disc of radius width / 2.
        assert_eq!(oracle_ellipse(&ds, &ds, 0.0, 2.0), ids(&[0, 1]));
        let grid = Graph::from_edges(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
        let ds = oracle_bfs(&grid, &ids(&[0]));
        assert_eq!(oracle_ellipse(&ds, &ds, 0.0, 100.0).len(), 4);
    }

    #[test]
    fn collision_geometry() {
        assert!(collision_course((0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (-1.0, 0.0)));
        assert!(!collision_course((0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (1.0, 0.0)));
        assert!(!within_sixty((1.0, 0.0), (1.0, 2.0)));
        assert!(within_sixty((1.0, 0.0), (1.0, 1.0)));
    }
}
