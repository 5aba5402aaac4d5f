//! Electrical topology of the deployed array and the heartbeat protocol
//! that spots failed modules.
//!
//! Conduction is three-valued: generating modules conduct and contribute,
//! shorted and bypassed modules conduct but contribute nothing, open
//! modules block. A module contributes when some conducting path links it
//! to a base module.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FailureMode, Lattice, ModuleId, ModuleSpec, Side};
use crate::sizing::module_power;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PowerError {
    #[error("module {initiator} is not docked to module {failed}")]
    NotAdjacent { failed: ModuleId, initiator: ModuleId },
    #[error("module {0} has not failed")]
    NotFailed(ModuleId),
    #[error("module {0} is not in the power graph")]
    UnknownModule(ModuleId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Generating,
    FailedOpen,
    FailedShorted,
    Bypassed,
}

impl NodeState {
    pub fn conducts(self) -> bool {
        self != NodeState::FailedOpen
    }

    pub fn is_failed(self) -> bool {
        matches!(self, NodeState::FailedOpen | NodeState::FailedShorted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Base(Side),
    Module(ModuleId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerGraph {
    states: BTreeMap<ModuleId, NodeState>,
    adj: BTreeMap<Node, BTreeSet<Node>>,
    /// Base modules currently feeding the bus.
    roots: BTreeSet<Side>,
}

impl PowerGraph {
    pub fn new() -> Self {
        Self { roots: Side::BOTH.into_iter().collect(), ..Default::default() }
    }

    /// Graph of every module off the base cells, docked to its lattice
    /// neighbours. States of modules already in `prev` carry over; new
    /// modules start out generating.
    pub fn from_lattice(lat: &Lattice, prev: Option<&PowerGraph>) -> Self {
        let mut g = Self::new();
        if let Some(p) = prev {
            g.roots = p.roots.clone();
        }
        for (&cell, &id) in lat.occupancy() {
            if lat.is_base(cell) {
                continue;
            }
            let st = prev.and_then(|p| p.state(id)).unwrap_or(NodeState::Generating);
            g.add_module(id, st);
        }
        let base_at: BTreeMap<_, _> = lat.bases().map(|(s, c)| (c, s)).collect();
        for (&cell, &id) in lat.occupancy() {
            if lat.is_base(cell) {
                continue;
            }
            for n in cell.neighbors4() {
                if let Some(side) = base_at.get(&n) {
                    g.connect(Node::Module(id), Node::Base(*side));
                } else if let Some(other) = lat.module_at(n) {
                    if !lat.is_base(n) {
                        g.connect(Node::Module(id), Node::Module(other));
                    }
                }
            }
        }
        g
    }

    pub fn add_module(&mut self, id: ModuleId, state: NodeState) {
        self.states.insert(id, state);
        self.adj.entry(Node::Module(id)).or_default();
    }

    pub fn connect(&mut self, a: Node, b: Node) {
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn state(&self, id: ModuleId) -> Option<NodeState> {
        self.states.get(&id).copied()
    }

    pub fn set_state(&mut self, id: ModuleId, state: NodeState) -> Result<(), PowerError> {
        let s = self.states.get_mut(&id).ok_or(PowerError::UnknownModule(id))?;
        *s = state;
        Ok(())
    }

    pub fn modules(&self) -> impl Iterator<Item = (ModuleId, NodeState)> + '_ {
        self.states.iter().map(|(i, s)| (*i, *s))
    }

    pub fn set_root(&mut self, side: Side, alive: bool) {
        if alive {
            self.roots.insert(side);
        } else {
            self.roots.remove(&side);
        }
    }

    pub fn roots(&self) -> &BTreeSet<Side> {
        &self.roots
    }

    pub fn docked(&self, a: ModuleId, b: ModuleId) -> bool {
        self.adj.get(&Node::Module(a)).is_some_and(|n| n.contains(&Node::Module(b)))
    }

    /// Generating modules with a conducting path to a live root.
    pub fn contributing(&self) -> BTreeSet<ModuleId> {
        let mut seen: BTreeSet<Node> = self.roots.iter().map(|s| Node::Base(*s)).collect();
        let mut queue: VecDeque<Node> = seen.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            for m in self.adj.get(&n).into_iter().flatten() {
                let enter = match m {
                    Node::Base(s) => self.roots.contains(s),
                    Node::Module(id) => self.states[id].conducts(),
                };
                if enter && seen.insert(*m) {
                    queue.push_back(*m);
                }
            }
        }
        seen.into_iter()
            .filter_map(|n| match n {
                Node::Module(id) if self.states[&id] == NodeState::Generating => Some(id),
                _ => None,
            })
            .collect()
    }
}

/// Array output reaching the bus, W.
pub fn net_output(g: &PowerGraph, spec: &ModuleSpec, age: f64) -> f64 {
    g.contributing().len() as f64 * module_power(spec, age)
}

/// The module `initiator`, docked beside `failed`, switches the failed
/// module's H-bridge to pass-through.
pub fn apply_bypass(g: &PowerGraph, failed: ModuleId, initiator: ModuleId) -> Result<PowerGraph, PowerError> {
    let st = g.state(failed).ok_or(PowerError::UnknownModule(failed))?;
    if g.state(initiator).is_none() {
        return Err(PowerError::UnknownModule(initiator));
    }
    if !g.docked(failed, initiator) {
        return Err(PowerError::NotAdjacent { failed, initiator });
    }
    if !st.is_failed() {
        return Err(PowerError::NotFailed(failed));
    }
    let mut out = g.clone();
    out.set_state(failed, NodeState::Bypassed)?;
    Ok(out)
}

/// One telemetry record from a module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReport {
    /// s
    pub timestamp: f64,
    pub module_id: ModuleId,
    pub temperature_k: f64,
    pub attitude_ok: bool,
    pub proximity_ok: bool,
    pub bus_voltage_ok: bool,
}

impl SensorReport {
    pub fn nominal(module_id: ModuleId, timestamp: f64) -> Self {
        Self { timestamp, module_id, temperature_k: 293.0, attitude_ok: true, proximity_ok: true, bus_voltage_ok: true }
    }
}

pub fn write_telemetry<W: io::Write>(w: W, reports: &[SensorReport]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in reports {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_telemetry<R: io::Read>(r: R) -> csv::Result<Vec<SensorReport>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthMonitor {
    /// s
    pub interval: f64,
    pub miss_threshold: u32,
    last_received: BTreeMap<ModuleId, f64>,
    flagged: BTreeSet<ModuleId>,
}

impl HealthMonitor {
    pub fn new(interval: f64, miss_threshold: u32) -> Self {
        assert!(interval > 0.0 && miss_threshold >= 1, "heartbeat interval and threshold must be positive");
        Self { interval, miss_threshold, last_received: BTreeMap::new(), flagged: BTreeSet::new() }
    }

    /// Starts watching `id` as if it had just reported at `t`.
    pub fn register(&mut self, id: ModuleId, t: f64) {
        self.last_received.insert(id, t);
    }

    pub fn forget(&mut self, id: ModuleId) {
        self.last_received.remove(&id);
        self.flagged.remove(&id);
    }

    pub fn last_received(&self, id: ModuleId) -> Option<f64> {
        self.last_received.get(&id).copied()
    }

    pub fn flagged(&self) -> &BTreeSet<ModuleId> {
        &self.flagged
    }

    pub fn is_flagged(&self, id: ModuleId) -> bool {
        self.flagged.contains(&id)
    }

    /// Records `received` and flags every silent module whose last report
    /// is more than `m * tau` old. Returns the newly flagged ids.
    pub fn tick(&mut self, now: f64, received: &[SensorReport]) -> Vec<ModuleId> {
        for r in received {
            let e = self.last_received.entry(r.module_id).or_insert(r.timestamp);
            *e = e.max(r.timestamp);
        }
        let limit = f64::from(self.miss_threshold) * self.interval;
        let mut out = Vec::new();
        for (id, last) in &self.last_received {
            if now - last > limit && self.flagged.insert(*id) {
                out.push(*id);
            }
        }
        out
    }

    /// `tick` with each report independently lost with probability `drop`.
    pub fn tick_lossy<R: Rng>(&mut self, now: f64, received: &[SensorReport], drop: f64, rng: &mut R) -> Vec<ModuleId> {
        let kept: Vec<SensorReport> = received.iter().filter(|_| !rng.gen_bool(drop)).copied().collect();
        self.tick(now, &kept)
    }
}

/// Functional form of [`HealthMonitor::tick`].
pub fn heartbeat_tick(mon: &HealthMonitor, now: f64, received: &[SensorReport]) -> (HealthMonitor, Vec<ModuleId>) {
    let mut m = mon.clone();
    let flagged = m.tick(now, received);
    (m, flagged)
}

/// Time of the first heartbeat tick (ticks at multiples of `interval_ms`)
/// strictly after `last_ms + m * interval_ms`.
pub fn detection_tick(last_ms: u64, interval_ms: u64, miss_threshold: u32) -> u64 {
    let deadline = last_ms + u64::from(miss_threshold) * interval_ms;
    (deadline / interval_ms + 1) * interval_ms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    Healthy,
    Failed(FailureMode),
}

/// Classifies `id` from the monitor's flag and the module's latest report.
/// Precedence: non-responsive, then battery temperature, then bus voltage.
pub fn diagnose(mon: &HealthMonitor, reports: &[SensorReport], id: ModuleId, battery_range_k: (f64, f64)) -> Diagnosis {
    if mon.is_flagged(id) {
        return Diagnosis::Failed(FailureMode::NonResponsive);
    }
    let latest = reports
        .iter()
        .filter(|r| r.module_id == id)
        .max_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    match latest {
        Some(r) if r.temperature_k < battery_range_k.0 || r.temperature_k > battery_range_k.1 => {
            Diagnosis::Failed(FailureMode::BatteryDamage)
        }
        Some(r) if !r.bus_voltage_ok => Diagnosis::Failed(FailureMode::ArrayDamage),
        _ => Diagnosis::Healthy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Cell;
    use proptest::prelude::*;

    fn chain(n: u32) -> PowerGraph {
        let mut lat = Lattice::for_satellite(2, 2);
        for k in 0..n {
            lat.place(Cell::new(3 + k as i32, 0), ModuleId(k + 1)).unwrap();
        }
        PowerGraph::from_lattice(&lat, None)
    }

    #[test]
    fn healthy_chain_of_six() {
        let p = net_output(&chain(6), &ModuleSpec::default(), 0.0);
        assert!((p - 6.0 * 4.41 * 1361.0 * 0.25).abs() < 1e-9);
    }

    #[test]
    fn open_middle_strands_outer_until_bypassed() {
        let spec = ModuleSpec::default();
        let unit = module_power(&spec, 0.0);
        let mut g = chain(3);
        g.set_state(ModuleId(2), NodeState::FailedOpen).unwrap();
        assert_eq!(net_output(&g, &spec, 0.0), unit);
        let mut lat = Lattice::for_satellite(2, 2);
        for k in 0..3 {
            lat.place(Cell::new(3 + k, 0), ModuleId(k as u32 + 1)).unwrap();
        }
        lat.place(Cell::new(4, 1), ModuleId(9)).unwrap();
        let g = PowerGraph::from_lattice(&lat, Some(&g));
        let g = apply_bypass(&g, ModuleId(2), ModuleId(9)).unwrap();
        assert_eq!(g.state(ModuleId(2)), Some(NodeState::Bypassed));
        assert_eq!(net_output(&g, &spec, 0.0), 3.0 * unit);
    }

    #[test]
    fn bypass_errors() {
        let mut g = chain(3);
        assert_eq!(apply_bypass(&g, ModuleId(1), ModuleId(2)), Err(PowerError::NotFailed(ModuleId(1))));
        g.set_state(ModuleId(1), NodeState::FailedShorted).unwrap();
        assert!(matches!(apply_bypass(&g, ModuleId(1), ModuleId(3)), Err(PowerError::NotAdjacent { .. })));
    }

    #[test]
    fn heartbeat_boundary() {
        let mut m = HealthMonitor::new(10.0, 3);
        m.register(ModuleId(1), 100.0);
        assert!(m.tick(130.0, &[]).is_empty());
        assert_eq!(m.tick(140.0, &[]), vec![ModuleId(1)]);
        assert!(m.tick(150.0, &[]).is_empty(), "flagged only once");
        assert_eq!(detection_tick(100_000, 10_000, 3), 140_000);
        assert_eq!(detection_tick(105_000, 10_000, 3), 140_000);
    }

    #[test]
    fn steady_reports_never_flag() {
        let mut m = HealthMonitor::new(10.0, 3);
        for id in 1..=5 {
            m.register(ModuleId(id), 0.0);
        }
        for k in 1..1000 {
            let t = f64::from(k) * 10.0;
            let rs: Vec<_> = (1..=5).map(|id| SensorReport::nominal(ModuleId(id), t)).collect();
            assert!(m.tick(t, &rs).is_empty());
        }
    }

    #[test]
    fn diagnosis_rules() {
        let mut m = HealthMonitor::new(10.0, 3);
        m.register(ModuleId(1), 0.0);
        let range = (273.0, 313.0);
        let ok = SensorReport::nominal(ModuleId(1), 5.0);
        assert_eq!(diagnose(&m, &[ok], ModuleId(1), range), Diagnosis::Healthy);
        let volt = SensorReport { bus_voltage_ok: false, ..ok };
        assert_eq!(diagnose(&m, &[volt], ModuleId(1), range), Diagnosis::Failed(FailureMode::ArrayDamage));
        let hot = SensorReport { temperature_k: 330.0, bus_voltage_ok: false, ..ok };
        assert_eq!(diagnose(&m, &[hot], ModuleId(1), range), Diagnosis::Failed(FailureMode::BatteryDamage));
        m.tick(100.0, &[]);
        assert_eq!(diagnose(&m, &[hot], ModuleId(1), range), Diagnosis::Failed(FailureMode::NonResponsive));
    }

    #[test]
    fn telemetry_csv_round_trip() {
        let rs = vec![SensorReport::nominal(ModuleId(3), 10.0), SensorReport { temperature_k: 250.5, ..SensorReport::nominal(ModuleId(4), 20.0) }];
        let mut buf = Vec::new();
        write_telemetry(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,module_id,temperature_k,attitude_ok,proximity_ok,bus_voltage_ok\n"));
        assert_eq!(read_telemetry(&buf[..]).unwrap(), rs);
    }

    /// Generating nodes with at least one simple path to a root whose
    /// interior avoids open nodes, by explicit path enumeration.
    fn oracle(states: &[NodeState], edges: &[(usize, usize)], root_links: &[usize]) -> usize {
        let n = states.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        fn dfs(v: usize, adj: &[Vec<usize>], st: &[NodeState], roots: &[usize], used: &mut Vec<bool>) -> bool {
            if roots.contains(&v) {
                return true;
            }
            for &w in &adj[v] {
                if !used[w] && st[w].conducts() {
                    used[w] = true;
                    if dfs(w, adj, st, roots, used) {
                        return true;
                    }
                    used[w] = false;
                }
            }
            false
        }
        (0..n)
            .filter(|&v| states[v] == NodeState::Generating)
            .filter(|&v| {
                let mut used = vec![false; n];
                used[v] = true;
                dfs(v, &adj, states, root_links, &mut used)
            })
            .count()
    }

    fn arb_state() -> impl Strategy<Value = NodeState> {
        prop_oneof![
            Just(NodeState::Generating),
            Just(NodeState::FailedOpen),
            Just(NodeState::FailedShorted),
            Just(NodeState::Bypassed),
        ]
    }

    proptest! {
        #[test]
        fn conduction_matches_path_enumeration(
            states in prop::collection::vec(arb_state(), 1..=10),
            raw_edges in prop::collection::vec((0usize..10, 0usize..10), 0..20),
            raw_roots in prop::collection::vec(0usize..10, 0..3),
        ) {
            let n = states.len();
            let edges: Vec<(usize, usize)> =
                raw_edges.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            let roots: Vec<usize> = raw_roots.into_iter().map(|r| r % n).collect();
            let mut g = PowerGraph::new();
            for (i, s) in states.iter().enumerate() {
                g.add_module(ModuleId(i as u32), *s);
            }
            for &(a, b) in &edges {
                g.connect(Node::Module(ModuleId(a as u32)), Node::Module(ModuleId(b as u32)));
            }
            for &r in &roots {
                g.connect(Node::Module(ModuleId(r as u32)), Node::Base(Side::Left));
            }
            prop_assert_eq!(g.contributing().len(), oracle(&states, &edges, &roots));
        }

        #[test]
        fn bypass_never_lowers_output(n in 2u32..8, fail in 0u32..8, open in any::<bool>()) {
            let spec = ModuleSpec::default();
            let fail = fail % n + 1;
            let mut g = chain(n);
            let st = if open { NodeState::FailedOpen } else { NodeState::FailedShorted };
            g.set_state(ModuleId(fail), st).unwrap();
            let before = net_output(&g, &spec, 0.0);
            let neighbour = if fail > 1 { fail - 1 } else { fail + 1 };
            let after = apply_bypass(&g, ModuleId(fail), ModuleId(neighbour)).unwrap();
            prop_assert!(net_output(&after, &spec, 0.0) >= before);
        }

        #[test]
        fn healthy_chain_is_array_power(n in 0u32..40) {
            let spec = ModuleSpec::default();
            let want = crate::sizing::array_power(n, &spec, 0.0);
            prop_assert!((net_output(&chain(n), &spec, 0.0) - want).abs() < 1e-6);
        }

        #[test]
        fn flagged_exactly_at_first_tick_past_deadline(last in 0u64..10_000, tau in 1u64..50, m in 1u32..6) {
            let mut mon = HealthMonitor::new(tau as f64, m);
            mon.register(ModuleId(1), last as f64);
            let first = detection_tick(last, tau, m);
            let mut t = (last / tau + 1) * tau;
            while t < first {
                prop_assert!(mon.tick(t as f64, &[]).is_empty());
                t += tau;
            }
            prop_assert_eq!(mon.tick(first as f64, &[]), vec![ModuleId(1)]);
        }
    }
}
