use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use super::scenario::{ScenarioError, TopologySpec};
use crate::eval::Point;
use crate::value::DeviceId;

/// An undirected graph over device ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    pub adj: BTreeMap<DeviceId, BTreeSet<DeviceId>>,
}

impl Graph {
    pub fn new(n: u32) -> Self {
        Graph {
            adj: (0..n).map(|i| (DeviceId(i), BTreeSet::new())).collect(),
        }
    }

    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Self {
        let mut g = Graph::new(n);
        for &(a, b) in edges {
            g.add_edge(DeviceId(a), DeviceId(b));
        }
        g
    }

    /// A path 0 - 1 - .. - (n-1).
    pub fn line(n: u32) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges)
    }

    pub fn add_edge(&mut self, a: DeviceId, b: DeviceId) {
        if a != b {
            self.adj.entry(a).or_default().insert(b);
            self.adj.entry(b).or_default().insert(a);
        }
    }

    pub fn devices(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.adj.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbours(&self, id: DeviceId) -> impl Iterator<Item = DeviceId> + '_ {
        self.adj.get(&id).into_iter().flat_map(|s| s.iter().copied())
    }

    fn hops_from(&self, start: DeviceId) -> BTreeMap<DeviceId, u32> {
        let mut dist = BTreeMap::from([(start, 0)]);
        let mut queue = VecDeque::from([start]);
        while let Some(d) = queue.pop_front() {
            let next = dist[&d] + 1;
            for n in self.neighbours(d) {
                if let std::collections::btree_map::Entry::Vacant(slot) = dist.entry(n) {
                    slot.insert(next);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        match self.devices().next() {
            None => true,
            Some(first) => self.hops_from(first).len() == self.len(),
        }
    }

    /// Largest hop distance between two devices; `None` when disconnected.
    pub fn diameter(&self) -> Option<u32> {
        let mut best = 0;
        for d in self.devices() {
            let dist = self.hops_from(d);
            if dist.len() != self.len() {
                return None;
            }
            best = best.max(dist.values().copied().max().unwrap_or(0));
        }
        Some(best)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Links {
    Disk(f64),
    Explicit,
}

/// The live network shape: positions plus the link rule, with edits from
/// environment actions layered on top.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Point>,
    links: Links,
    added: BTreeSet<(u32, u32)>,
    removed: BTreeSet<(u32, u32)>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn distance(p: Point, q: Point) -> f64 {
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

impl Topology {
    pub fn from_spec(spec: &TopologySpec, rng: &mut impl Rng) -> Result<Self, ScenarioError> {
        let explicit = |positions: Vec<Point>, edges: BTreeSet<(u32, u32)>| Topology {
            positions,
            links: Links::Explicit,
            added: edges,
            removed: BTreeSet::new(),
        };
        Ok(match spec {
            TopologySpec::Grid { width, height, spacing } => {
                let (w, h) = (*width, *height);
                let mut positions = Vec::new();
                let mut edges = BTreeSet::new();
                for y in 0..h {
                    for x in 0..w {
                        let id = y * w + x;
                        positions.push((x as f64 * spacing, y as f64 * spacing));
                        if x + 1 < w {
                            edges.insert((id, id + 1));
                        }
                        if y + 1 < h {
                            edges.insert((id, id + w));
                        }
                    }
                }
                explicit(positions, edges)
            }
            TopologySpec::UnitDisk { radius, positions } => Topology {
                positions: positions.iter().map(|p| (p[0], p[1])).collect(),
                links: Links::Disk(*radius),
                added: BTreeSet::new(),
                removed: BTreeSet::new(),
            },
            TopologySpec::Edges {
                devices,
                edges,
                positions,
            } => {
                let positions = match positions {
                    Some(ps) => ps.iter().map(|p| (p[0], p[1])).collect(),
                    None => (0..*devices).map(|i| (i as f64, 0.0)).collect(),
                };
                explicit(
                    positions,
                    edges.iter().filter(|[a, b]| a != b).map(|[a, b]| key(*a, *b)).collect(),
                )
            }
            TopologySpec::RandomUnitDisk { devices, radius, side } => Topology {
                positions: random_connected_positions(*devices, *radius, *side, rng)?,
                links: Links::Disk(*radius),
                added: BTreeSet::new(),
                removed: BTreeSet::new(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: DeviceId) -> Point {
        self.positions[id.0 as usize]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn linked(&self, a: DeviceId, b: DeviceId) -> bool {
        if a == b {
            return false;
        }
        let k = key(a.0, b.0);
        if self.removed.contains(&k) {
            return false;
        }
        if self.added.contains(&k) {
            return true;
        }
        match self.links {
            Links::Disk(r) => distance(self.position(a), self.position(b)) <= r,
            Links::Explicit => false,
        }
    }

    /// Devices linked to `id`, in id order.
    pub fn neighbours(&self, id: DeviceId) -> Vec<DeviceId> {
        (0..self.positions.len() as u32)
            .map(DeviceId)
            .filter(|&o| self.linked(id, o))
            .collect()
    }

    pub fn add_edge(&mut self, a: DeviceId, b: DeviceId) {
        let k = key(a.0, b.0);
        self.removed.remove(&k);
        self.added.insert(k);
    }

    pub fn remove_edge(&mut self, a: DeviceId, b: DeviceId) {
        let k = key(a.0, b.0);
        self.added.remove(&k);
        self.removed.insert(k);
    }

    pub fn move_device(&mut self, id: DeviceId, to: Point) {
        self.positions[id.0 as usize] = to;
    }

    pub fn graph(&self) -> Graph {
        let n = self.positions.len() as u32;
        let mut g = Graph::new(n);
        for a in 0..n {
            for b in a + 1..n {
                if self.linked(DeviceId(a), DeviceId(b)) {
                    g.add_edge(DeviceId(a), DeviceId(b));
                }
            }
        }
        g
    }
}

/// Draw `n` uniform positions in a `side x side` square until the unit-disk
/// graph of the given radius is connected.
pub fn random_connected_positions(
    n: u32,
    radius: f64,
    side: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Point>, ScenarioError> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let positions: Vec<Point> = (0..n)
            .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        let t = Topology {
            positions: positions.clone(),
            links: Links::Disk(radius),
            added: BTreeSet::new(),
            removed: BTreeSet::new(),
        };
        if t.graph().is_connected() {
            return Ok(positions);
        }
    }
    Err(ScenarioError::Invalid(format!(
        "no connected layout of {} devices with radius {} in a square of side {} after {} attempts",
        n, radius, side, ATTEMPTS
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn grid_center_has_four_neighbours() {
        let t = Topology::from_spec(
            &TopologySpec::Grid {
                width: 3,
                height: 3,
                spacing: 1.0,
            },
            &mut rng(),
        )
        .unwrap();
        assert_eq!(
            t.neighbours(DeviceId(4)),
            vec![DeviceId(1), DeviceId(3), DeviceId(5), DeviceId(7)]
        );
        assert_eq!(t.graph().diameter(), Some(4));
    }

    #[test]
    fn unit_disk_distances() {
        let spec = TopologySpec::UnitDisk {
            radius: 1.5,
            positions: vec![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]],
        };
        let t = Topology::from_spec(&spec, &mut rng()).unwrap();
        assert_eq!(t.neighbours(DeviceId(0)), vec![DeviceId(1)]);
        assert_eq!(t.neighbours(DeviceId(1)), vec![DeviceId(0)]);
        assert!(t.neighbours(DeviceId(2)).is_empty());
        assert!(!t.graph().is_connected());
    }

    #[test]
    fn explicit_edges_and_edits() {
        let spec = TopologySpec::Edges {
            devices: 3,
            edges: vec![[0, 1]],
            positions: None,
        };
        let mut t = Topology::from_spec(&spec, &mut rng()).unwrap();
        assert_eq!(t.neighbours(DeviceId(0)), vec![DeviceId(1)]);
        assert!(t.neighbours(DeviceId(2)).is_empty());
        t.add_edge(DeviceId(2), DeviceId(1));
        t.remove_edge(DeviceId(1), DeviceId(0));
        assert_eq!(t.neighbours(DeviceId(1)), vec![DeviceId(2)]);
    }

    #[test]
    fn random_layouts_are_connected_and_seeded() {
        let a = random_connected_positions(30, 0.3, 1.0, &mut rng()).unwrap();
        let b = random_connected_positions(30, 0.3, 1.0, &mut rng()).unwrap();
        assert_eq!(a, b);
        let spec = TopologySpec::UnitDisk {
            radius: 0.3,
            positions: a.iter().map(|p| [p.0, p.1]).collect(),
        };
        assert!(Topology::from_spec(&spec, &mut rng()).unwrap().graph().is_connected());
    }

    #[test]
    fn line_diameter() {
        assert_eq!(Graph::line(4).diameter(), Some(3));
        assert_eq!(Graph::new(0).diameter(), Some(0));
    }
}
