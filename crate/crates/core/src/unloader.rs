//! Two-rod dispensing mechanism that lifts modules off the launch stack,
//! turns them over at the spiral guide and sets them on a base module.
//!
//! Each rod serves the base module on its own side. The stack must always
//! be held by a docked connector, so the rod holding it can only lift once
//! the other rod has docked.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModuleId, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    IdleAtStackTop,
    DockedToTop,
    Lifting,
    AtSpiralGuide,
    Turned180,
    Descending,
    PlacingOnBase,
    ReturningUp,
    ReorientingToStack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Dock,
    Lift,
    SpiralTurn,
    Descend,
    Place,
    Return,
    Reorient,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::Dock,
        EventKind::Lift,
        EventKind::SpiralTurn,
        EventKind::Descend,
        EventKind::Place,
        EventKind::Return,
        EventKind::Reorient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Dock => "dock",
            EventKind::Lift => "lift",
            EventKind::SpiralTurn => "spiral_turn",
            EventKind::Descend => "descend",
            EventKind::Place => "place",
            EventKind::Return => "return",
            EventKind::Reorient => "reorient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnloaderEvent {
    pub kind: EventKind,
    pub rod: Side,
}

impl UnloaderEvent {
    pub fn new(kind: EventKind, rod: Side) -> Self {
        Self { kind, rod }
    }
}

impl fmt::Display for UnloaderEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.rod, self.kind.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnloaderError {
    #[error("{event:?} is not allowed on the {rod} rod in phase {phase:?}")]
    IllegalTransition { rod: Side, phase: Phase, event: EventKind },
    #[error("the stack is empty")]
    StackEmpty,
    #[error("the {0} base module is already holding a module")]
    BaseOccupied(Side),
    #[error("the {0} base module holds nothing to release")]
    BaseEmpty(Side),
    #[error("no rod is free to secure the stack")]
    NoSecuringRod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RodState {
    pub phase: Phase,
    pub carried: Option<ModuleId>,
}

/// Vertical layout used to report connector heights, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub satellite_height: f64,
    pub stack_pitch: f64,
    pub overtravel: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { satellite_height: 5.56, stack_pitch: 0.1, overtravel: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnloaderState {
    rods: BTreeMap<Side, RodState>,
    /// Stowed modules, top first.
    stack: Vec<ModuleId>,
    secured_by: Option<Side>,
    bases: BTreeMap<Side, Option<ModuleId>>,
    /// Modules that have left a base module for the lattice.
    released: Vec<ModuleId>,
    /// Everything ever loaded into the stack.
    launched: usize,
    /// Height of the stack when it was last full, in modules. Sets the
    /// guide height.
    initial_stack: usize,
}

fn idle() -> RodState {
    RodState { phase: Phase::IdleAtStackTop, carried: None }
}

impl UnloaderState {
    /// Both rods idle at the stack top; the right one holds the stack.
    pub fn new(stack: Vec<ModuleId>) -> Self {
        let secured_by = if stack.is_empty() { None } else { Some(Side::Right) };
        Self {
            rods: Side::BOTH.into_iter().map(|s| (s, idle())).collect(),
            launched: stack.len(),
            initial_stack: stack.len(),
            stack,
            secured_by,
            bases: Side::BOTH.into_iter().map(|s| (s, None)).collect(),
            released: Vec::new(),
        }
    }

    pub fn rod(&self, side: Side) -> RodState {
        self.rods[&side]
    }

    pub fn stack(&self) -> &[ModuleId] {
        &self.stack
    }

    pub fn secured_by(&self) -> Option<Side> {
        self.secured_by
    }

    pub fn base_occupant(&self, side: Side) -> Option<ModuleId> {
        self.bases[&side]
    }

    pub fn released(&self) -> &[ModuleId] {
        &self.released
    }

    pub fn launched(&self) -> usize {
        self.launched
    }

    /// Connector height of `rod` above the payload adapter, m.
    pub fn connector_height(&self, rod: Side, g: &Geometry) -> f64 {
        let top = g.satellite_height + self.stack.len() as f64 * g.stack_pitch;
        let guide = g.satellite_height + self.initial_stack as f64 * g.stack_pitch + g.overtravel;
        match self.rods[&rod].phase {
            Phase::IdleAtStackTop | Phase::DockedToTop | Phase::ReorientingToStack => top,
            Phase::Lifting | Phase::AtSpiralGuide | Phase::Turned180 => guide,
            Phase::Descending | Phase::ReturningUp => (guide + g.satellite_height) / 2.0,
            Phase::PlacingOnBase => g.satellite_height,
        }
    }

    /// Applies one event.
    pub fn step(&self, ev: UnloaderEvent) -> Result<UnloaderState, UnloaderError> {
        let mut s = self.clone();
        let rod = ev.rod;
        let other = rod.other();
        let phase = s.rods[&rod].phase;
        let illegal = UnloaderError::IllegalTransition { rod, phase, event: ev.kind };
        let r = s.rods.get_mut(&rod).expect("both rods present");
        match (ev.kind, phase) {
            (EventKind::Dock, Phase::IdleAtStackTop) => {
                if s.stack.is_empty() {
                    return Err(UnloaderError::StackEmpty);
                }
                r.phase = Phase::DockedToTop;
                s.secured_by.get_or_insert(rod);
            }
            (EventKind::Lift, Phase::DockedToTop) => {
                if s.stack.is_empty() {
                    return Err(UnloaderError::StackEmpty);
                }
                let remaining = s.stack.len() - 1;
                if s.secured_by == Some(rod) && remaining > 0 {
                    if s.rods[&other].phase != Phase::DockedToTop {
                        return Err(illegal);
                    }
                    s.secured_by = Some(other);
                } else if remaining == 0 {
                    s.secured_by = None;
                }
                let id = s.stack.remove(0);
                let r = s.rods.get_mut(&rod).expect("both rods present");
                r.carried = Some(id);
                r.phase = Phase::Lifting;
            }
            (EventKind::SpiralTurn, Phase::Lifting | Phase::AtSpiralGuide) => r.phase = Phase::Turned180,
            (EventKind::Descend, Phase::Turned180) => r.phase = Phase::Descending,
            (EventKind::Place, Phase::Descending) => {
                if s.bases[&rod].is_some() {
                    return Err(UnloaderError::BaseOccupied(rod));
                }
                let id = r.carried.take().expect("descending rod carries a module");
                r.phase = Phase::PlacingOnBase;
                s.bases.insert(rod, Some(id));
            }
            (EventKind::Return, Phase::PlacingOnBase) => r.phase = Phase::ReturningUp,
            (EventKind::Reorient, Phase::ReturningUp | Phase::ReorientingToStack) => r.phase = Phase::IdleAtStackTop,
            _ => return Err(illegal),
        }
        Ok(s)
    }

    /// The module on `side`'s base unfolds onto the lattice.
    pub fn release_base(&self, side: Side) -> Result<(UnloaderState, ModuleId), UnloaderError> {
        let mut s = self.clone();
        let id = s.bases.get_mut(&side).and_then(Option::take).ok_or(UnloaderError::BaseEmpty(side))?;
        s.released.push(id);
        Ok((s, id))
    }

    /// New modules arrive at the bottom of the stack.
    pub fn resupply(&self, ids: &[ModuleId]) -> Result<UnloaderState, UnloaderError> {
        let mut s = self.clone();
        if ids.is_empty() {
            return Ok(s);
        }
        if s.secured_by.is_none() {
            let holder = [Side::Right, Side::Left]
                .into_iter()
                .find(|r| matches!(s.rods[r].phase, Phase::IdleAtStackTop | Phase::DockedToTop))
                .ok_or(UnloaderError::NoSecuringRod)?;
            s.secured_by = Some(holder);
        }
        s.stack.extend_from_slice(ids);
        s.launched += ids.len();
        s.initial_stack = s.initial_stack.max(s.stack.len());
        Ok(s)
    }

    /// Canonical event sequence that moves the top module onto `side`'s
    /// base. Returns the new state, the module and the events applied.
    pub fn dispense(&self, side: Side) -> Result<(UnloaderState, ModuleId, Vec<UnloaderEvent>), UnloaderError> {
        if self.stack.is_empty() {
            return Err(UnloaderError::StackEmpty);
        }
        if self.bases[&side].is_some() {
            return Err(UnloaderError::BaseOccupied(side));
        }
        let mut events = Vec::new();
        if self.rods[&side].phase == Phase::IdleAtStackTop {
            events.push(UnloaderEvent::new(EventKind::Dock, side));
        }
        let other = side.other();
        if self.secured_by == Some(side) && self.stack.len() > 1 && self.rods[&other].phase == Phase::IdleAtStackTop {
            events.push(UnloaderEvent::new(EventKind::Dock, other));
        }
        for k in [
            EventKind::Lift,
            EventKind::SpiralTurn,
            EventKind::Descend,
            EventKind::Place,
            EventKind::Return,
            EventKind::Reorient,
        ] {
            events.push(UnloaderEvent::new(k, side));
        }
        let mut s = self.clone();
        for ev in &events {
            s = s.step(*ev)?;
        }
        let id = s.bases[&side].expect("place put a module on the base");
        Ok((s, id, events))
    }

    /// Every module is in exactly one place, and the count matches what was
    /// loaded.
    pub fn conserved(&self) -> bool {
        let mut all: Vec<ModuleId> = self.stack.clone();
        all.extend(self.rods.values().filter_map(|r| r.carried));
        all.extend(self.bases.values().flatten());
        all.extend(self.released.iter().copied());
        let distinct: BTreeSet<ModuleId> = all.iter().copied().collect();
        all.len() == self.launched && distinct.len() == all.len()
    }

    /// While anything is stowed, a docked (or idle-with-dock) rod holds it.
    pub fn top_attached(&self) -> bool {
        if self.stack.is_empty() {
            return true;
        }
        match self.secured_by {
            Some(r) => matches!(self.rods[&r].phase, Phase::DockedToTop | Phase::IdleAtStackTop),
            None => false,
        }
    }

    /// Both rods in motion with nothing holding a non-empty stack.
    pub fn both_moving_unsecured(&self) -> bool {
        let moving = |p: Phase| matches!(p, Phase::Lifting | Phase::Descending);
        Side::BOTH.iter().all(|r| moving(self.rods[r].phase)) && !self.top_attached()
    }
}

/// Seconds each event takes before the next one may start.
pub fn event_duration(kind: EventKind, phase_duration: f64) -> f64 {
    match kind {
        EventKind::SpiralTurn => 0.0,
        _ => phase_duration,
    }
}

/// Total time for a dispense sequence, s.
pub fn sequence_duration(events: &[UnloaderEvent], phase_duration: f64) -> f64 {
    events.iter().map(|e| event_duration(e.kind, phase_duration)).sum()
}

/// Replays `events` from `start` and writes one trace line per event,
/// stamped with the time the event fires.
pub fn trace_lines(
    start: &UnloaderState,
    events: &[UnloaderEvent],
    t0: f64,
    phase_duration: f64,
) -> Result<Vec<String>, UnloaderError> {
    let mut s = start.clone();
    let mut t = t0;
    let mut out = Vec::new();
    for ev in events {
        s = s.step(*ev)?;
        let carried = s.rod(ev.rod).carried.map_or("none".to_string(), |m| m.to_string());
        out.push(format!(
            "t={} {} {} carried={carried} stack={}",
            crate::fmt_seconds(t),
            ev.rod,
            ev.kind.as_str(),
            s.stack.len()
        ));
        t += event_duration(ev.kind, phase_duration);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCheckReport {
    pub states: usize,
    pub transitions: usize,
    pub violations: Vec<String>,
    /// Quiescent states with stowed modules from which no rod can dispense.
    pub stuck: usize,
}

/// Explores every reachable state from a fresh stack of `n` modules under
/// all unloader events plus base releases, checking the invariants in each.
pub fn model_check(n: usize) -> ModelCheckReport {
    let start = UnloaderState::new((1..=n as u32).map(ModuleId).collect());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut states: Vec<UnloaderState> = Vec::new();
    let mut transitions = 0;
    let mut violations = Vec::new();
    while let Some(s) = queue.pop_front() {
        if !s.top_attached() {
            violations.push(format!("top-attachment broken: {s:?}"));
        }
        if !s.conserved() {
            violations.push(format!("conservation broken: {s:?}"));
        }
        if s.both_moving_unsecured() {
            violations.push(format!("both rods moving with the stack unsecured: {s:?}"));
        }
        let mut next = Vec::new();
        for rod in Side::BOTH {
            for k in EventKind::ALL {
                if let Ok(t) = s.step(UnloaderEvent::new(k, rod)) {
                    next.push(t);
                }
            }
            if let Ok((t, _)) = s.release_base(rod) {
                next.push(t);
            }
        }
        for t in next {
            transitions += 1;
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
        states.push(s);
    }
    // from any quiescent state with modules left, clearing the bases must
    // let some rod dispense again
    let stuck = states
        .iter()
        .filter(|s| !s.stack.is_empty() && !in_flight(s))
        .filter(|s| {
            let mut free = (*s).clone();
            for side in Side::BOTH {
                if let Ok((t, _)) = free.release_base(side) {
                    free = t;
                }
            }
            Side::BOTH.iter().all(|side| free.dispense(*side).is_err())
        })
        .count();
    ModelCheckReport { states: states.len(), transitions, violations, stuck }
}

fn in_flight(s: &UnloaderState) -> bool {
    s.rods.values().any(|r| !matches!(r.phase, Phase::IdleAtStackTop | Phase::DockedToTop))
}
