//! Discrete-event mission simulation, Monte Carlo replication and the
//! architecture comparison.
//!
//! Time runs in integer milliseconds. Failure times are drawn in years and
//! kept exact for lifetime accounting; the event queue sees them rounded.
//! A replica simulates the power system to the horizon even after a fatal
//! non-power failure, so the power-limited lifetime does not depend on the
//! other subsystems.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::distributions::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fmt_seconds;
use crate::model::{
    Architecture, Cell, FailureMode, HazardModel, Lattice, ModuleId, ModuleState, PowerMode, Resupply, Scenario, Side,
    Subsystem, Weibull,
};
use crate::planner::{
    assembly_plan, default_targets, replacement_plan, satellite_lattice, Move, MoveKind, Plan,
};
use crate::power::{apply_bypass, detection_tick, diagnose, net_output, Diagnosis, HealthMonitor, NodeState, PowerGraph, SensorReport};
use crate::reliability::{draw_power_mode, draw_subsystem_time, rng_stream, sample_failure_time, FailureDraw, StreamPurpose};
use crate::sizing::{build_comparison_table, ComparisonRow};
use crate::unloader::{sequence_duration, UnloaderState};

pub type SimTime = u64;

pub const MS_PER_YEAR: f64 = 365.25 * 86_400.0 * 1000.0;

pub fn years_to_ms(y: f64) -> SimTime {
    (y * MS_PER_YEAR).round().max(0.0) as SimTime
}

pub fn ms_to_years(t: SimTime) -> f64 {
    t as f64 / MS_PER_YEAR
}

fn secs_to_ms(s: f64) -> SimTime {
    (s * 1000.0).round().max(0.0) as SimTime
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    UnloadStep { module: ModuleId, side: Side },
    /// One planner move; `last` closes the plan it belongs to.
    MoveStep { module: ModuleId, mv: Move, last: bool },
    HeartbeatTick { module: ModuleId },
    SubsystemFailure(FailureDraw),
    ModuleFailure { module: ModuleId, mode: PowerMode, open: bool, years: f64 },
    DetectionFlag { module: ModuleId, mode: FailureMode },
    ReplacementDispatched { failed: ModuleId },
    Resupply { count: u32 },
    MissionEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::UnloadStep { .. } => "unload_step",
            EventKind::MoveStep { .. } => "move_step",
            EventKind::HeartbeatTick { .. } => "heartbeat_tick",
            EventKind::SubsystemFailure(_) => "subsystem_failure",
            EventKind::ModuleFailure { .. } => "module_failure",
            EventKind::DetectionFlag { .. } => "detection_flag",
            EventKind::ReplacementDispatched { .. } => "replacement_dispatched",
            EventKind::Resupply { .. } => "resupply",
            EventKind::MissionEnd => "mission_end",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    /// years until the array could no longer meet demand for good
    pub power_limited_lifetime: f64,
    pub power_censored: bool,
    /// years until the first fatal failure of any kind
    pub mission_lifetime: f64,
    pub mission_censored: bool,
    pub replacements_used: u32,
    pub spares_remaining: u32,
    pub recovery_failures: u32,
    pub module_failures: u32,
    /// (years, W) at every change of array output
    pub power_timeline: Vec<(f64, f64)>,
    pub invariant_violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_log: Option<Vec<String>>,
}

/// Superposition of minimal-repair Weibull processes: after each event the
/// next one follows the same cumulative hazard from where it left off.
struct PowerProcess {
    /// (law, cumulative hazard at the last arrival, next arrival in years)
    parts: Vec<(Weibull, f64, f64)>,
}

impl PowerProcess {
    fn new<R: Rng>(laws: Vec<Weibull>, rng: &mut R) -> Self {
        let parts = laws
            .into_iter()
            .map(|w| {
                let u: f64 = rng.sample(Open01);
                let t = sample_failure_time(w.shape, w.scale, u).expect("Open01 lies in (0, 1)");
                (w, (t / w.scale).powf(w.shape), t)
            })
            .collect();
        Self { parts }
    }

    fn peek(&self) -> Option<f64> {
        self.parts.iter().map(|p| p.2).min_by(f64::total_cmp)
    }

    fn advance<R: Rng>(&mut self, rng: &mut R) {
        let Some(i) = (0..self.parts.len()).min_by(|a, b| self.parts[*a].2.total_cmp(&self.parts[*b].2)) else {
            return;
        };
        let (w, lam, _) = self.parts[i];
        let u: f64 = rng.sample(Open01);
        let lam = lam - u.ln();
        self.parts[i] = (w, lam, w.scale * lam.powf(1.0 / w.shape));
    }
}

fn power_laws(h: &HazardModel) -> Vec<Weibull> {
    if !h.power.enabled {
        return Vec::new();
    }
    let mut v = vec![h.power.weibull()];
    v.extend(h.power.infant);
    v
}

/// Earliest fatal non-power failure, if any subsystem is enabled.
fn draw_nonpower<R: Rng>(h: &HazardModel, rng: &mut R) -> Option<(f64, Subsystem)> {
    let mut best: Option<(f64, Subsystem)> = None;
    for (s, sh) in h.enabled() {
        if s == Subsystem::Power {
            continue;
        }
        let t = draw_subsystem_time(sh, rng);
        if best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, s));
        }
    }
    best
}

/// Everything about a scenario that does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub lattice: Lattice,
    pub assembly: Option<Plan>,
    pub assembly_error: Option<String>,
}

impl Prepared {
    pub fn new(s: &Scenario) -> Self {
        let lattice = satellite_lattice(s);
        let (assembly, assembly_error) = match s.architecture {
            Architecture::Sspare { .. } => {
                let targets = default_targets(&lattice, s.deployed_count());
                let ids: Vec<ModuleId> = (1..=s.stack_count()).map(ModuleId).collect();
                match assembly_plan(&lattice, &targets, &ids) {
                    Ok(p) => (Some(p), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            }
            _ => (None, None),
        };
        Self { scenario: s.clone(), lattice, assembly, assembly_error }
    }
}

struct Streams {
    nonpower: ChaCha8Rng,
    power: ChaCha8Rng,
    choice: ChaCha8Rng,
    electrical: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64, replica: u64) -> Self {
        Self {
            nonpower: rng_stream(seed, replica, StreamPurpose::NonPower),
            power: rng_stream(seed, replica, StreamPurpose::PowerFailures),
            choice: rng_stream(seed, replica, StreamPurpose::ModuleChoice),
            electrical: rng_stream(seed, replica, StreamPurpose::ElectricalMode),
        }
    }
}

struct Engine<'a> {
    s: &'a Scenario,
    horizon: SimTime,
    queue: BinaryHeap<SimEvent>,
    seq: u64,
    log: Option<Vec<String>>,
    rng: Streams,
    power: PowerProcess,

    lattice: Lattice,
    graph: PowerGraph,
    unloader: UnloaderState,
    monitor: HealthMonitor,
    states: BTreeMap<ModuleId, ModuleState>,
    launched: u32,
    next_id: u32,

    commissioned: bool,
    undetected: BTreeSet<ModuleId>,
    waiting: VecDeque<ModuleId>,
    in_progress: Option<(ModuleId, ModuleId)>,
    active: VecDeque<(ModuleId, Move)>,
    resupply_due: Vec<(SimTime, u32)>,

    outage_start: Option<f64>,
    power_end: Option<f64>,
    nonpower_end: Option<f64>,
    replacements: u32,
    recovery_failures: u32,
    module_failures: u32,
    timeline: Vec<(f64, f64)>,
    violations: Vec<String>,
    failure_modes: FailureModes,
}

impl<'a> Engine<'a> {
    fn push(&mut self, time: SimTime, kind: EventKind) {
        self.seq += 1;
        self.queue.push(SimEvent { time, seq: self.seq, kind });
    }

    fn note(&mut self, ev: &SimEvent, details: String) {
        if let Some(log) = &mut self.log {
            let t = fmt_seconds(ev.time as f64 / 1000.0);
            if details.is_empty() {
                log.push(format!("t={t} seq={} {}", ev.seq, ev.kind.name()));
            } else {
                log.push(format!("t={t} seq={} {} {details}", ev.seq, ev.kind.name()));
            }
        }
    }

    fn phase_s(&self) -> f64 {
        self.s.operations.unload_phase_duration_s
    }

    fn move_ms(&self) -> SimTime {
        secs_to_ms(self.s.operations.move_duration_s)
    }

    fn net(&self) -> f64 {
        net_output(&self.graph, &self.s.module_spec, 0.0)
    }

    fn record_power(&mut self, years: f64) {
        let p = self.net();
        if self.timeline.last().is_none_or(|&(_, q)| q != p) {
            self.timeline.push((years, p));
        }
    }

    fn future_resupply(&self, now: SimTime) -> bool {
        self.resupply_due.iter().any(|&(t, c)| t > now && c > 0)
    }

    fn recoverable(&self, now: SimTime) -> bool {
        if self.in_progress.is_some() {
            return true;
        }
        let pending = !self.undetected.is_empty() || !self.waiting.is_empty();
        pending && (!self.unloader.stack().is_empty() || self.future_resupply(now))
    }

    /// Re-evaluates the demand margin after any change.
    fn check_power(&mut self, now: SimTime, years: f64) {
        if !self.commissioned || self.power_end.is_some() {
            return;
        }
        self.record_power(years);
        if self.net() + 1e-9 >= self.s.bus_demand {
            self.outage_start = None;
            return;
        }
        let start = *self.outage_start.get_or_insert(years);
        if !self.recoverable(now) {
            self.power_end = Some(start);
        }
    }

    fn check_conservation(&mut self, now: SimTime) {
        let stowed = self.states.values().filter(|s| matches!(s, ModuleState::Stowed(_))).count();
        if stowed != self.unloader.stack().len() {
            self.violations.push(format!("t={now}: {stowed} stowed modules but {} in the stack", self.unloader.stack().len()));
        }
        if self.states.len() != self.launched as usize || self.unloader.launched() != self.launched as usize {
            self.violations.push(format!("t={now}: module count {} differs from launched {}", self.states.len(), self.launched));
        }
    }

    /// Makes `plan` the active one and starts its first step.
    fn start_plan(&mut self, now: SimTime, plan: &Plan) -> Result<(), String> {
        self.active = plan.steps.iter().copied().collect();
        self.advance(now)
    }

    /// Schedules the next step of the active plan. A placement dispenses
    /// the stack top now and lands it once the unloader sequence is done.
    fn advance(&mut self, now: SimTime) -> Result<(), String> {
        let Some((id, mv)) = self.active.pop_front() else { return Ok(()) };
        if mv.kind == MoveKind::Place {
            let side = self
                .lattice
                .bases()
                .find(|(_, c)| *c == mv.to)
                .map(|(s, _)| s)
                .ok_or_else(|| format!("place on {} is not a base", mv.to))?;
            let (u, got, events) = self.unloader.dispense(side).map_err(|e| e.to_string())?;
            if got != id {
                return Err(format!("stack top is module {got}, plan expects {id}"));
            }
            self.unloader = u;
            self.restack_states();
            self.states.insert(id, ModuleState::InTransit);
            let t = now + secs_to_ms(sequence_duration(&events, self.phase_s()));
            self.push(t, EventKind::UnloadStep { module: id, side });
        } else {
            let last = self.active.is_empty();
            let t = now + self.move_ms();
            self.push(t, EventKind::MoveStep { module: id, mv, last });
        }
        Ok(())
    }

    fn advance_or_note(&mut self, now: SimTime) {
        if let Err(e) = self.advance(now) {
            self.violations.push(format!("plan step: {e}"));
            self.active.clear();
        }
    }

    fn restack_states(&mut self) {
        for (i, id) in self.unloader.stack().to_vec().into_iter().enumerate() {
            self.states.insert(id, ModuleState::Stowed(i));
        }
    }

    fn try_dispatch(&mut self, now: SimTime) {
        if !self.commissioned || self.in_progress.is_some() || self.unloader.stack().is_empty() {
            return;
        }
        if let Some(failed) = self.waiting.pop_front() {
            let new = self.unloader.stack()[0];
            self.in_progress = Some((failed, new));
            self.push(now, EventKind::ReplacementDispatched { failed });
        }
    }

    fn generating_modules(&self) -> Vec<ModuleId> {
        self.graph.modules().filter(|(_, s)| *s == NodeState::Generating).map(|(id, _)| id).collect()
    }

    fn handle(&mut self, ev: SimEvent) {
        let now = ev.time;
        let years = match &ev.kind {
            EventKind::SubsystemFailure(d) => d.time,
            EventKind::ModuleFailure { years, .. } => *years,
            _ => ms_to_years(now),
        };
        match ev.kind.clone() {
            EventKind::UnloadStep { module, side } => {
                let base = self.lattice.base(side).expect("side has a base");
                if let Err(e) = self.lattice.place(base, module) {
                    self.violations.push(format!("unload onto {base}: {e}"));
                }
                self.note(&ev, format!("module={module} side={side}"));
                self.advance_or_note(now);
            }
            EventKind::MoveStep { module, mv, last } => {
                self.note(&ev, format!("module={module} {} {} -> {} anchor {}", mv.kind, mv.from, mv.to, mv.anchor));
                if mv.kind == MoveKind::Unfold {
                    let side = self.lattice.bases().find(|(_, c)| *c == mv.from).map(|(s, _)| s).expect("unfold from a base");
                    match self.unloader.release_base(side) {
                        Ok((u, _)) => self.unloader = u,
                        Err(e) => self.violations.push(e.to_string()),
                    }
                }
                self.lattice.relocate(mv.from, mv.to);
                if last {
                    self.finish_plan(now, years, module, mv.to);
                } else {
                    self.advance_or_note(now);
                }
            }
            EventKind::HeartbeatTick { module } => {
                self.note(&ev, format!("module={module}"));
                self.heartbeat(now, module);
            }
            EventKind::SubsystemFailure(d) => self.subsystem_failure(&ev, d),
            EventKind::ModuleFailure { module, mode, open, .. } => {
                self.module_failures += 1;
                let st = if open { NodeState::FailedOpen } else { NodeState::FailedShorted };
                self.note(&ev, format!("module={module} mode={mode} electrical={}", if open { "open" } else { "shorted" }));
                let _ = self.graph.set_state(module, st);
                let cell = self.lattice.position(module).unwrap_or(Cell::new(0, 0));
                let provisional = if open { FailureMode::NonResponsive } else { FailureMode::ArrayDamage };
                self.states.insert(module, ModuleState::Failed(cell, provisional));
                self.undetected.insert(module);
                let tau = secs_to_ms(self.s.heartbeat_interval);
                let at = if open {
                    // the module's last report went out at the last tick
                    let last = now / tau * tau;
                    detection_tick(last, tau, self.s.miss_threshold)
                } else {
                    (now / tau + 1) * tau
                };
                self.failure_modes.insert(module, (mode, open, now / tau * tau));
                self.push(at, EventKind::HeartbeatTick { module });
                self.check_power(now, years);
            }
            EventKind::DetectionFlag { module, mode } => {
                self.note(&ev, format!("module={module} diagnosis={mode}"));
                if let Some(ModuleState::Failed(c, _)) = self.states.get(&module).copied() {
                    self.states.insert(module, ModuleState::Failed(c, mode));
                }
                self.undetected.remove(&module);
                self.waiting.push_back(module);
                self.try_dispatch(now);
                self.check_power(now, years);
            }
            EventKind::ReplacementDispatched { failed } => self.dispatch(&ev, failed),
            EventKind::Resupply { count } => {
                self.note(&ev, format!("count={count}"));
                let ids: Vec<ModuleId> = (0..count).map(|k| ModuleId(self.next_id + k)).collect();
                match self.unloader.resupply(&ids) {
                    Ok(u) => {
                        self.unloader = u;
                        self.next_id += count;
                        self.launched += count;
                        self.restack_states();
                    }
                    Err(e) => self.violations.push(format!("resupply: {e}")),
                }
                self.resupply_due.retain(|&(t, _)| t > now);
                self.try_dispatch(now);
                self.check_power(now, years);
            }
            EventKind::MissionEnd => self.note(&ev, String::new()),
        }
        self.check_conservation(now);
    }

    fn finish_plan(&mut self, now: SimTime, years: f64, module: ModuleId, at: Cell) {
        self.states.insert(module, ModuleState::Deployed(at));
        self.graph = PowerGraph::from_lattice(&self.lattice, Some(&self.graph));
        if !self.commissioned {
            self.commissioned = true;
            for (id, _) in self.graph.modules().collect::<Vec<_>>() {
                self.monitor.register(id, now as f64 / 1000.0);
            }
        } else if let Some((failed, new)) = self.in_progress.take() {
            self.monitor.register(new, now as f64 / 1000.0);
            match apply_bypass(&self.graph, failed, new) {
                Ok(g) => {
                    self.graph = g;
                    if let Some(c) = self.states.get(&failed).and_then(|s| s.cell()) {
                        self.states.insert(failed, ModuleState::Bypassed(c));
                    }
                }
                Err(e) => {
                    self.recovery_failures += 1;
                    self.violations.push(format!("bypass of {failed} by {new}: {e}"));
                }
            }
        }
        self.check_power(now, years);
        self.try_dispatch(now);
    }

    fn heartbeat(&mut self, now: SimTime, module: ModuleId) {
        let Some(&(mode, open, last_tick)) = self.failure_modes.get(&module) else { return };
        let t = now as f64 / 1000.0;
        let range = (self.s.operations.battery_temp_min_k, self.s.operations.battery_temp_max_k);
        let diagnosis = if open {
            self.monitor.register(module, last_tick as f64 / 1000.0);
            self.monitor.tick(t, &[]);
            diagnose(&self.monitor, &[], module, range)
        } else {
            let mut r = SensorReport::nominal(module, t);
            if mode == PowerMode::Battery {
                r.temperature_k = range.1 + 20.0;
            } else {
                r.bus_voltage_ok = false;
            }
            self.monitor.register(module, t);
            self.monitor.tick(t, &[r]);
            diagnose(&self.monitor, &[r], module, range)
        };
        match diagnosis {
            Diagnosis::Failed(m) => self.push(now, EventKind::DetectionFlag { module, mode: m }),
            Diagnosis::Healthy => self.violations.push(format!("failed module {module} diagnosed healthy")),
        }
    }

    fn subsystem_failure(&mut self, ev: &SimEvent, d: FailureDraw) {
        let now = ev.time;
        if d.subsystem != Subsystem::Power {
            self.note(ev, format!("subsystem={} fatal", d.subsystem));
            self.nonpower_end.get_or_insert(d.time);
            return;
        }
        let mode = d.mode.unwrap_or(PowerMode::SolarArrayOperation);
        if !matches!(self.s.architecture, Architecture::Sspare { .. }) {
            self.note(ev, format!("subsystem=power mode={mode} fatal"));
            self.power_end.get_or_insert(d.time);
            return;
        }
        // schedule the next arrival of the power process
        self.power.advance(&mut self.rng.power);
        if let Some(next) = self.power.peek() {
            self.schedule_power(next);
        }
        let to_base = mode == PowerMode::PowerDistribution
            && self.s.operations.distribution_to_base_fraction > 0.0
            && self.rng.electrical.gen_bool(self.s.operations.distribution_to_base_fraction);
        if to_base {
            let alive: Vec<Side> = self.graph.roots().iter().copied().collect();
            if alive.is_empty() {
                self.note(ev, format!("subsystem=power mode={mode} target=none"));
                return;
            }
            let side = alive[self.rng.choice.gen_range(0..alive.len())];
            self.note(ev, format!("subsystem=power mode={mode} target=base_{side}"));
            self.graph.set_root(side, false);
            if self.graph.roots().is_empty() && self.power_end.is_none() {
                // nothing can carry power to the bus any more
                self.record_power(d.time);
                self.power_end = Some(d.time);
            }
            self.check_power(now, d.time);
            return;
        }
        let candidates = self.generating_modules();
        if candidates.is_empty() {
            self.note(ev, format!("subsystem=power mode={mode} target=none"));
            return;
        }
        let module = candidates[self.rng.choice.gen_range(0..candidates.len())];
        let open = self.rng.electrical.gen_bool(self.s.operations.open_failure_probability);
        self.note(ev, format!("subsystem=power mode={mode} target=module_{module}"));
        self.push(now, EventKind::ModuleFailure { module, mode, open, years: d.time });
    }

    fn schedule_power(&mut self, years: f64) {
        let t = years_to_ms(years);
        if t < self.horizon {
            let mode = draw_power_mode(&self.s.hazard.power_modes, &mut self.rng.electrical);
            let d = FailureDraw { time: years, subsystem: Subsystem::Power, mode: Some(mode) };
            self.push(t, EventKind::SubsystemFailure(d));
        }
    }

    fn dispatch(&mut self, ev: &SimEvent, failed: ModuleId) {
        let now = ev.time;
        let Some((_, new)) = self.in_progress else { return };
        let plan = match replacement_plan(&self.lattice, failed, new) {
            Ok(p) => p,
            Err(e) => return self.recovery_failed(ev, failed, e.to_string()),
        };
        self.note(ev, format!("failed={failed} module={new} moves={}", plan.motion_count()));
        match self.start_plan(now, &plan) {
            Ok(()) => self.replacements += 1,
            Err(e) => self.recovery_failed(ev, failed, e),
        }
    }

    fn recovery_failed(&mut self, ev: &SimEvent, failed: ModuleId, reason: String) {
        self.note(ev, format!("failed={failed} outcome=recovery_failed reason=\"{reason}\""));
        self.recovery_failures += 1;
        self.in_progress = None;
        let years = ms_to_years(ev.time);
        self.check_power(ev.time, years);
        self.try_dispatch(ev.time);
    }
}

/// Per-failure bookkeeping the heartbeat needs: power mode, open or not,
/// and the last tick at which the module still reported.
type FailureModes = BTreeMap<ModuleId, (PowerMode, bool, SimTime)>;

/// One resupply entry per year, `per_year` modules each, through the
/// horizon.
pub fn unlimited_resupply(horizon_years: f64, per_year: u32) -> Vec<Resupply> {
    (1..=horizon_years.floor() as u32).map(|y| Resupply { year: f64::from(y), count: per_year }).collect()
}

pub fn run_replica(s: &Scenario, seed: u64) -> ReplicaResult {
    run_prepared(&Prepared::new(s), seed, 0, false)
}

pub fn run_replica_logged(s: &Scenario, seed: u64) -> ReplicaResult {
    run_prepared(&Prepared::new(s), seed, 0, true)
}

/// Runs replica `replica` of a prepared scenario on its own streams.
pub fn run_prepared(p: &Prepared, seed: u64, replica: u64, with_log: bool) -> ReplicaResult {
    let s = &p.scenario;
    let horizon = years_to_ms(s.mission_duration);
    let mut rng = Streams::new(seed, replica);
    let power = PowerProcess::new(power_laws(&s.hazard), &mut rng.power);
    let stack: Vec<ModuleId> = (1..=s.stack_count()).map(ModuleId).collect();
    let mut e = Engine {
        s,
        horizon,
        queue: BinaryHeap::new(),
        seq: 0,
        log: with_log.then(Vec::new),
        rng,
        power,
        lattice: p.lattice.clone(),
        graph: PowerGraph::new(),
        unloader: UnloaderState::new(stack.clone()),
        monitor: HealthMonitor::new(s.heartbeat_interval, s.miss_threshold),
        states: stack.iter().enumerate().map(|(i, id)| (*id, ModuleState::Stowed(i))).collect(),
        launched: stack.len() as u32,
        next_id: stack.len() as u32 + 1,
        commissioned: false,
        undetected: BTreeSet::new(),
        waiting: VecDeque::new(),
        in_progress: None,
        active: VecDeque::new(),
        resupply_due: Vec::new(),
        outage_start: None,
        power_end: None,
        nonpower_end: None,
        replacements: 0,
        recovery_failures: 0,
        module_failures: 0,
        timeline: Vec::new(),
        violations: Vec::new(),
        failure_modes: FailureModes::new(),
    };

    if let Some((t, sub)) = draw_nonpower(&s.hazard, &mut e.rng.nonpower) {
        if years_to_ms(t) < horizon {
            e.push(years_to_ms(t), EventKind::SubsystemFailure(FailureDraw { time: t, subsystem: sub, mode: None }));
        }
    }
    if let Some(t) = e.power.peek() {
        e.schedule_power(t);
    }

    if let Architecture::Sspare { resupply_schedule, .. } = &s.architecture {
        for r in resupply_schedule {
            let t = years_to_ms(r.year);
            if t <= horizon && r.count > 0 {
                e.resupply_due.push((t, r.count));
                e.push(t, EventKind::Resupply { count: r.count });
            }
        }
        match (&p.assembly, &p.assembly_error) {
            (Some(plan), _) => {
                if let Err(msg) = e.start_plan(0, plan) {
                    e.violations.push(format!("assembly: {msg}"));
                    e.power_end = Some(0.0);
                }
                e.restack_states();
                if plan.is_empty() {
                    e.commissioned = true;
                    e.check_power(0, 0.0);
                }
            }
            (None, err) => {
                e.violations.push(format!("assembly: {}", err.clone().unwrap_or_default()));
                e.power_end = Some(0.0);
            }
        }
    }
    e.push(horizon, EventKind::MissionEnd);

    while let Some(ev) = e.queue.pop() {
        let end = ev.kind == EventKind::MissionEnd;
        e.handle(ev);
        if end {
            break;
        }
    }

    let h = s.mission_duration;
    let mut power_life = e.power_end.map_or(h, |t| t.min(h));
    let mut mission_life = e.nonpower_end.map_or(h, |t| t.min(h)).min(power_life);
    if let Architecture::ServicerExtended { extension_years, servicing_epoch, .. } = s.architecture {
        if power_life >= servicing_epoch {
            power_life = (power_life + extension_years).min(h);
        }
        if mission_life >= servicing_epoch {
            mission_life = (mission_life + extension_years).min(h);
        }
    }
    let spares_remaining = e.unloader.stack().len() as u32;
    ReplicaResult {
        power_censored: power_life >= h,
        power_limited_lifetime: power_life,
        mission_censored: mission_life >= h,
        mission_lifetime: mission_life,
        replacements_used: e.replacements,
        spares_remaining,
        recovery_failures: e.recovery_failures,
        module_failures: e.module_failures,
        power_timeline: e.timeline,
        invariant_violations: e.violations,
        event_log: e.log,
    }
}

/// Mean and standard error of a sample, summed in sorted order so the
/// result does not depend on how the values were produced.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub label: String,
    pub replicas: usize,
    pub base_seed: u64,
    pub mean_power_lifetime: f64,
    pub se_power_lifetime: f64,
    pub mean_mission_lifetime: f64,
    pub se_mission_lifetime: f64,
    pub power_censored_fraction: f64,
    pub mission_censored_fraction: f64,
    /// (year, fraction of replicas whose mission is still alive)
    pub survival_curve: Vec<(f64, f64)>,
    /// replacements used -> replica count
    pub replacement_histogram: BTreeMap<u32, usize>,
    pub mean_replacements: f64,
    pub recovery_failures: u64,
    pub invariant_violations: usize,
}

pub fn summarize(label: &str, base_seed: u64, horizon: f64, results: &[ReplicaResult]) -> MonteCarloSummary {
    let n = results.len();
    let power: Vec<f64> = results.iter().map(|r| r.power_limited_lifetime).collect();
    let mission: Vec<f64> = results.iter().map(|r| r.mission_lifetime).collect();
    let (mp, sp) = mean_se(&power);
    let (mm, sm) = mean_se(&mission);
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let years = horizon.ceil().max(1.0) as u32;
    let survival_curve = (0..=years)
        .map(|y| {
            let t = f64::from(y).min(horizon);
            (t, frac(mission.iter().filter(|m| **m >= t).count()))
        })
        .collect();
    let mut hist = BTreeMap::new();
    for r in results {
        *hist.entry(r.replacements_used).or_insert(0) += 1;
    }
    let reps: Vec<f64> = results.iter().map(|r| f64::from(r.replacements_used)).collect();
    MonteCarloSummary {
        label: label.to_string(),
        replicas: n,
        base_seed,
        mean_power_lifetime: mp,
        se_power_lifetime: sp,
        mean_mission_lifetime: mm,
        se_mission_lifetime: sm,
        power_censored_fraction: frac(results.iter().filter(|r| r.power_censored).count()),
        mission_censored_fraction: frac(results.iter().filter(|r| r.mission_censored).count()),
        survival_curve,
        replacement_histogram: hist,
        mean_replacements: mean_se(&reps).0,
        recovery_failures: results.iter().map(|r| u64::from(r.recovery_failures)).sum(),
        invariant_violations: results.iter().map(|r| r.invariant_violations.len()).sum(),
    }
}

/// All replicas of one scenario, in replica order.
pub fn run_replicas(s: &Scenario, replicas: usize, base_seed: u64) -> Vec<ReplicaResult> {
    let p = Prepared::new(s);
    (0..replicas as u64).into_par_iter().map(|i| run_prepared(&p, base_seed, i, false)).collect()
}

pub fn run_monte_carlo(s: &Scenario, replicas: usize, base_seed: u64) -> MonteCarloSummary {
    let results = run_replicas(s, replicas.max(1), base_seed);
    summarize(&s.label(), base_seed, s.mission_duration, &results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub statics: ComparisonRow,
    pub simulated: MonteCarloSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub replicas: usize,
    pub base_seed: u64,
    pub rows: Vec<ComparisonEntry>,
}

/// Static table columns for one scenario: the baseline itself for a
/// traditional satellite, otherwise the derived row.
pub fn static_row(s: &Scenario, baseline: &ComparisonRow) -> ComparisonRow {
    match s.architecture {
        Architecture::Traditional => ComparisonRow { label: s.label(), ..baseline.clone() },
        _ => build_comparison_table(std::slice::from_ref(s), baseline).pop().expect("one derived row"),
    }
}

/// One row per scenario; every scenario runs on the same seeds.
pub fn compare_architectures(
    scenarios: &[Scenario],
    replicas: usize,
    base_seed: u64,
    baseline: &ComparisonRow,
) -> ComparisonReport {
    let rows = scenarios
        .iter()
        .map(|s| ComparisonEntry { statics: static_row(s, baseline), simulated: run_monte_carlo(s, replicas, base_seed) })
        .collect();
    ComparisonReport { replicas: replicas.max(1), base_seed, rows }
}
