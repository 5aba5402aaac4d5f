//! Pivoting locomotion of square modules on the lattice: single-module
//! paths, whole-array assembly and replacement plans, and plan replay.
//!
//! Move kinds, for a mover at `from`:
//! - `Pivot90`: to the diagonal cell, about an anchor edge-adjacent to both.
//!   The other cell edge-adjacent to both is swept and must be clear.
//! - `Pivot180`: two cells along an axis, over the anchor between them. One
//!   of the two side strips beside the path must be clear.
//! - `Roll`: one cell along an axis, about an anchor beside `from`.
//! - `Unfold`: off a base module onto an edge-adjacent cell.
//! - `Place`: the unloader sets a stowed module on an empty base cell.
//!
//! Every destination must be free, and the mover must end edge-adjacent to
//! another module or a base cell. Base cells are never destinations except
//! for `Place`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cell, Lattice, ModelError, ModuleId, Scenario, Side};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("no module at {0}")]
    NotOccupied(Cell),
    #[error("moving the module at {0} would disconnect the structure")]
    WouldDisconnect(Cell),
    #[error("no path from {from} to {to}")]
    Unreachable { from: Cell, to: Cell },
    #[error("need {needed} modules but only {available} are stacked")]
    InsufficientModules { needed: usize, available: usize },
    #[error("module {0} has no free edge-adjacent cell")]
    NoAdjacentSlot(ModuleId),
    #[error("module {0} is not on the lattice")]
    UnknownModule(ModuleId),
    #[error("no empty base cell to dispense onto")]
    NoFreeBase,
    #[error("step {index}: {reason}")]
    InvalidStep { index: usize, reason: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Model(String),
}

impl From<ModelError> for PlannerError {
    fn from(e: ModelError) -> Self {
        PlannerError::Model(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Pivot90,
    Pivot180,
    Roll,
    Unfold,
    Place,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Pivot90 => "pivot90",
            MoveKind::Pivot180 => "pivot180",
            MoveKind::Roll => "roll",
            MoveKind::Unfold => "unfold",
            MoveKind::Place => "place",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MoveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "pivot90" => MoveKind::Pivot90,
            "pivot180" => MoveKind::Pivot180,
            "roll" => MoveKind::Roll,
            "unfold" => MoveKind::Unfold,
            "place" => MoveKind::Place,
            other => return Err(format!("unknown move kind '{other}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub from: Cell,
    pub to: Cell,
    pub anchor: Cell,
}

impl Move {
    /// Cells that must be free while the move runs, for `Pivot180` on the
    /// given side. Empty for every other kind.
    pub fn side_strip(&self, side: (i32, i32)) -> [Cell; 3] {
        let (sx, sy) = side;
        [self.from.offset(sx, sy), self.anchor.offset(sx, sy), self.to.offset(sx, sy)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Assembly,
    Replacement(ModuleId),
    Relocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<(ModuleId, Move)>,
    pub provenance: Provenance,
}

impl Plan {
    pub fn new(provenance: Provenance) -> Self {
        Self { steps: Vec::new(), provenance }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Steps that move a module across the lattice (everything but `Place`).
    pub fn motion_count(&self) -> usize {
        self.steps.iter().filter(|(_, m)| m.kind != MoveKind::Place).count()
    }

    /// Parses the line format written by `Display`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str, provenance: Provenance) -> Result<Self, PlannerError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| PlannerError::Parse { line: i + 1, msg };
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 7 || tok[3] != "->" || tok[5] != "anchor" {
                return Err(err(format!(
                    "expected '<id> <kind> <x>,<y> -> <x>,<y> anchor <x>,<y>', got '{line}'"
                )));
            }
            let id = tok[0].parse::<u32>().map_err(|e| err(format!("module id: {e}")))?;
            let kind = tok[1].parse::<MoveKind>().map_err(err)?;
            let cell = |s: &str| -> Result<Cell, PlannerError> {
                let (x, y) = s.split_once(',').ok_or_else(|| err(format!("bad cell '{s}'")))?;
                let x = x.parse().map_err(|_| err(format!("bad cell '{s}'")))?;
                let y = y.parse().map_err(|_| err(format!("bad cell '{s}'")))?;
                Ok(Cell::new(x, y))
            };
            let mv = Move { kind, from: cell(tok[2])?, to: cell(tok[4])?, anchor: cell(tok[6])? };
            steps.push((ModuleId(id), mv));
        }
        Ok(Self { steps, provenance })
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, m) in &self.steps {
            writeln!(f, "{id} {} {} -> {} anchor {}", m.kind, m.from, m.to, m.anchor)?;
        }
        Ok(())
    }
}

const DIRS: [(i32, i32); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

fn perpendicular((dx, _): (i32, i32)) -> [(i32, i32); 2] {
    if dx != 0 {
        [(0, -1), (0, 1)]
    } else {
        [(-1, 0), (1, 0)]
    }
}

fn anchors(rest: &Lattice, c: Cell) -> bool {
    rest.is_occupied(c) || rest.is_base(c)
}

fn attached(rest: &Lattice, c: Cell) -> bool {
    c.neighbors4().into_iter().any(|n| anchors(rest, n))
}

/// Moves for a mover at `pos` over `rest`, the lattice without the mover.
/// Sorted by (kind, to, anchor).
fn candidate_moves(rest: &Lattice, pos: Cell) -> Vec<Move> {
    let mut out = Vec::new();
    if rest.is_base(pos) {
        for to in pos.neighbors4() {
            if rest.is_free(to) {
                out.push(Move { kind: MoveKind::Unfold, from: pos, to, anchor: pos });
            }
        }
        out.sort();
        return out;
    }
    let ok = |to: Cell, anchor: Cell| rest.is_free(to) && anchors(rest, anchor) && attached(rest, to);
    for d in DIRS {
        let step = pos.offset(d.0, d.1);
        for s in perpendicular(d) {
            let beside = pos.offset(s.0, s.1);
            if ok(step, beside) {
                out.push(Move { kind: MoveKind::Roll, from: pos, to: step, anchor: beside });
            }
            // the corner cell opposite the anchor is swept on the way round
            let diag = step.offset(s.0, s.1);
            for (anchor, swept) in [(step, beside), (beside, step)] {
                if ok(diag, anchor) && rest.is_free(swept) {
                    out.push(Move { kind: MoveKind::Pivot90, from: pos, to: diag, anchor });
                }
            }
        }
        let far = step.offset(d.0, d.1);
        if ok(far, step) {
            let mv = Move { kind: MoveKind::Pivot180, from: pos, to: far, anchor: step };
            let clear = perpendicular(d)
                .into_iter()
                .any(|s| mv.side_strip(s).into_iter().all(|c| rest.is_free(c)));
            if clear {
                out.push(mv);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn without(lat: &Lattice, c: Cell) -> Lattice {
    let mut rest = lat.clone();
    rest.remove(c);
    rest
}

/// All legal moves of the module at `mover`, sorted by (kind, to, anchor).
pub fn feasible_moves(lat: &Lattice, mover: Cell) -> Result<Vec<Move>, PlannerError> {
    if !lat.is_occupied(mover) {
        return Err(PlannerError::NotOccupied(mover));
    }
    if !lat.is_connected(Some(mover)) {
        return Err(PlannerError::WouldDisconnect(mover));
    }
    Ok(candidate_moves(&without(lat, mover), mover))
}

/// Breadth-first search over mover positions. Returns the parent move and
/// distance of every reachable position.
fn explore(rest: &Lattice, start: Cell) -> BTreeMap<Cell, (u32, Option<Move>)> {
    let mut seen = BTreeMap::from([(start, (0u32, None))]);
    let mut queue = VecDeque::from([start]);
    while let Some(pos) = queue.pop_front() {
        let d = seen[&pos].0;
        for mv in candidate_moves(rest, pos) {
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(mv.to) {
                e.insert((d + 1, Some(mv)));
                queue.push_back(mv.to);
            }
        }
    }
    seen
}

fn trace(tree: &BTreeMap<Cell, (u32, Option<Move>)>, to: Cell) -> Vec<Move> {
    let mut path = Vec::new();
    let mut cur = to;
    while let Some((_, Some(mv))) = tree.get(&cur) {
        path.push(*mv);
        cur = mv.from;
    }
    path.reverse();
    path
}

/// Minimum-move path for the module at `from`. The rest of the structure
/// stays put.
pub fn plan_path(lat: &Lattice, from: Cell, to: Cell) -> Result<Plan, PlannerError> {
    let id = lat.module_at(from).ok_or(PlannerError::NotOccupied(from))?;
    let mut plan = Plan::new(Provenance::Relocation);
    if from == to {
        return Ok(plan);
    }
    if !lat.is_free(to) {
        return Err(PlannerError::Unreachable { from, to });
    }
    if !lat.is_connected(Some(from)) {
        return Err(PlannerError::WouldDisconnect(from));
    }
    let rest = without(lat, from);
    let tree = explore(&rest, from);
    if !tree.contains_key(&to) {
        return Err(PlannerError::Unreachable { from, to });
    }
    plan.steps = trace(&tree, to).into_iter().map(|m| (id, m)).collect();
    Ok(plan)
}

/// Target cells per side.
pub type Targets = BTreeMap<Side, BTreeSet<Cell>>;

/// Breadth-first distance from `base` through `shape`; cells not connected
/// to the base get `u32::MAX`.
fn shape_distances(base: Cell, shape: &BTreeSet<Cell>) -> BTreeMap<Cell, u32> {
    let mut dist = BTreeMap::from([(base, 0u32)]);
    let mut queue = VecDeque::from([base]);
    while let Some(c) = queue.pop_front() {
        let d = dist[&c];
        for n in c.neighbors4() {
            if shape.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    shape.iter().map(|c| (*c, dist.get(c).copied().unwrap_or(u32::MAX))).collect()
}

fn apply(lat: &mut Lattice, id: ModuleId, mv: &Move) -> Result<(), ModelError> {
    match mv.kind {
        MoveKind::Place => lat.place(mv.to, id),
        _ => {
            lat.relocate(mv.from, mv.to);
            Ok(())
        }
    }
}

fn place_move(base: Cell) -> Move {
    Move { kind: MoveKind::Place, from: base, to: base, anchor: base }
}

/// Deploys modules from the stack (top first) until every target cell is
/// filled. Sides alternate right, left, right, ...; within a side the
/// unfilled target nearest the base (through the target shape) goes first,
/// skipping targets the mover cannot currently reach.
pub fn assembly_plan(start: &Lattice, targets: &Targets, stack: &[ModuleId]) -> Result<Plan, PlannerError> {
    let needed: usize = targets.values().map(BTreeSet::len).sum();
    if needed > stack.len() {
        return Err(PlannerError::InsufficientModules { needed, available: stack.len() });
    }
    let mut lat = start.clone();
    let mut plan = Plan::new(Provenance::Assembly);
    let mut order: BTreeMap<Side, Vec<Cell>> = BTreeMap::new();
    for (side, shape) in targets {
        let base = lat.base(*side).ok_or(PlannerError::NoFreeBase)?;
        if let Some(bad) = shape.iter().find(|c| !lat.is_free(**c)) {
            return Err(PlannerError::Unreachable { from: base, to: *bad });
        }
        let dist = shape_distances(base, shape);
        let mut cells: Vec<Cell> = shape.iter().copied().collect();
        cells.sort_by_key(|c| (dist[c], *c));
        order.insert(*side, cells);
    }
    let mut ids = stack.iter().copied();
    let mut turn = Side::Right;
    loop {
        let side = if order.get(&turn).is_some_and(|v| !v.is_empty()) {
            turn
        } else if order.get(&turn.other()).is_some_and(|v| !v.is_empty()) {
            turn.other()
        } else {
            break;
        };
        let base = lat.base(side).ok_or(PlannerError::NoFreeBase)?;
        if lat.is_occupied(base) {
            return Err(PlannerError::NoFreeBase);
        }
        let id = ids.next().expect("stack checked above");
        let tree = explore(&lat, base);
        let pending = order.get_mut(&side).expect("side present");
        let Some(k) = pending.iter().position(|c| tree.contains_key(c)) else {
            return Err(PlannerError::Unreachable { from: base, to: pending[0] });
        };
        let target = pending.remove(k);
        let place = place_move(base);
        apply(&mut lat, id, &place)?;
        plan.steps.push((id, place));
        for mv in trace(&tree, target) {
            apply(&mut lat, id, &mv)?;
            plan.steps.push((id, mv));
        }
        turn = side.other();
    }
    Ok(plan)
}

/// Routes `new_id` from an empty base cell to the free cell beside
/// `failed` that takes the fewest moves. Ties prefer the right side, then
/// the lower cell. The failed module stays where it is.
pub fn replacement_plan(lat: &Lattice, failed: ModuleId, new_id: ModuleId) -> Result<Plan, PlannerError> {
    let at = lat.position(failed).ok_or(PlannerError::UnknownModule(failed))?;
    let slots: Vec<Cell> = at.neighbors4().into_iter().filter(|c| lat.is_free(*c)).collect();
    if slots.is_empty() {
        return Err(PlannerError::NoAdjacentSlot(failed));
    }
    let mut best: Option<(u32, usize, Cell, Side)> = None;
    let mut trees = BTreeMap::new();
    for (rank, side) in [Side::Right, Side::Left].into_iter().enumerate() {
        let Some(base) = lat.base(side) else { continue };
        if lat.is_occupied(base) {
            continue;
        }
        let tree = explore(lat, base);
        for s in &slots {
            if let Some((d, _)) = tree.get(s) {
                let key = (*d, rank, *s, side);
                if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                    best = Some(key);
                }
            }
        }
        trees.insert(side, (base, tree));
    }
    if trees.is_empty() {
        return Err(PlannerError::NoFreeBase);
    }
    let Some((_, _, slot, side)) = best else {
        return Err(PlannerError::Unreachable { from: at, to: slots[0] });
    };
    let (base, tree) = &trees[&side];
    let mut plan = Plan::new(Provenance::Replacement(failed));
    plan.steps.push((new_id, place_move(*base)));
    plan.steps.extend(trace(tree, slot).into_iter().map(|m| (new_id, m)));
    Ok(plan)
}

/// Replays `plan` from `start`, checking every precondition, and returns
/// the final configuration.
pub fn validate_plan(start: &Lattice, plan: &Plan) -> Result<Lattice, PlannerError> {
    let mut lat = start.clone();
    for (index, (id, mv)) in plan.steps.iter().enumerate() {
        let fail = |reason: String| PlannerError::InvalidStep { index, reason };
        if mv.kind == MoveKind::Place {
            if !lat.is_base(mv.to) || mv.from != mv.to || mv.anchor != mv.to {
                return Err(fail(format!("place target {} is not a base cell", mv.to)));
            }
            if let Some(other) = lat.module_at(mv.to) {
                return Err(fail(format!("base {} already holds module {other}", mv.to)));
            }
            if lat.position(*id).is_some() {
                return Err(fail(format!("module {id} is already on the lattice")));
            }
        } else {
            match lat.position(*id) {
                Some(c) if c == mv.from => {}
                Some(c) => return Err(fail(format!("module {id} is at {c}, not {}", mv.from))),
                None => return Err(fail(format!("module {id} is not on the lattice"))),
            }
            let legal = feasible_moves(&lat, mv.from).map_err(|e| fail(e.to_string()))?;
            if !legal.contains(mv) {
                return Err(fail(format!("{} {} -> {} anchor {} is not a legal move", mv.kind, mv.from, mv.to, mv.anchor)));
            }
        }
        apply(&mut lat, *id, mv).map_err(|e| fail(e.to_string()))?;
    }
    Ok(lat)
}

/// Lattice for a scenario's bus: body columns across the width, rows along
/// the length, both in module edges.
pub fn satellite_lattice(s: &Scenario) -> Lattice {
    let e = s.module_spec.edge_length;
    let cols = (s.satellite_dims.width / e).ceil() as u32;
    let rows = (s.satellite_dims.length / e).ceil() as u32;
    Lattice::for_satellite(cols, rows)
}

/// Straight arms along the base row, `per_right` cells outward from the
/// right base and `per_left` from the left one.
pub fn arm_targets(lat: &Lattice, per_right: u32, per_left: u32) -> Targets {
    let mut t = Targets::new();
    for (side, n, dx) in [(Side::Right, per_right, 1), (Side::Left, per_left, -1)] {
        if let Some(b) = lat.base(side) {
            let cells = (1..=n as i32).map(|k| b.offset(dx * k, 0)).collect();
            t.insert(side, cells);
        }
    }
    t
}

/// Default active shape for `n` deployed modules: arms along the base row,
/// the right arm taking the odd one.
pub fn default_targets(lat: &Lattice, n: u32) -> Targets {
    arm_targets(lat, n.div_ceil(2), n / 2)
}

/// Two mirrored 19-module arrays: a 6 x 3 block beside each base plus the
/// cell above the base. The cell below each base stays open so new modules
/// can unfold.
pub fn mirrored_array_targets(lat: &Lattice) -> Targets {
    let mut t = Targets::new();
    for (side, dx) in [(Side::Left, -1), (Side::Right, 1)] {
        let Some(b) = lat.base(side) else { continue };
        let mut cells = BTreeSet::from([b.offset(0, 1)]);
        for k in 1..=6 {
            for dy in -1..=1 {
                cells.insert(b.offset(dx * k, dy));
            }
        }
        t.insert(side, cells);
    }
    t
}

/// A target shape read from an ASCII grid.
#[derive(Debug, Clone)]
pub struct TargetGrid {
    pub lattice: Lattice,
    pub targets: Targets,
    /// True when the grid itself marked body cells.
    pub has_body: bool,
}

/// Reads a grid of `#` (target), `.` (empty), `B` (base) and `X` (body)
/// characters. Exactly two `B` on one row; the left one lands at (-1, 0)
/// and rows above it have larger y. Targets left of the midpoint between
/// the bases belong to the left side. Without `X` cells the body is
/// `body_rows` rows filling the gap between the bases, from row 0 upward.
pub fn parse_target_grid(text: &str, body_rows: u32) -> Result<TargetGrid, PlannerError> {
    let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.trim().is_empty()).collect();
    let mut bases = Vec::new();
    for (r, line) in rows.iter().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            match ch {
                'B' => bases.push((r, c)),
                '#' | '.' | 'X' | ' ' => {}
                other => {
                    return Err(PlannerError::Parse { line: r + 1, msg: format!("unexpected character '{other}'") })
                }
            }
        }
    }
    if bases.len() != 2 || bases[0].0 != bases[1].0 {
        return Err(PlannerError::Parse { line: 0, msg: "grid needs exactly two 'B' cells on the same row".into() });
    }
    let (br, bc) = bases[0];
    let to_cell = |r: usize, c: usize| Cell::new(c as i32 - bc as i32 - 1, br as i32 - r as i32);
    let lb = to_cell(bases[0].0, bases[0].1);
    let rb = to_cell(bases[1].0, bases[1].1);
    let mut body = BTreeSet::new();
    let mut marked = BTreeSet::new();
    for (r, line) in rows.iter().enumerate() {
        for (c, ch) in line.chars().enumerate() {
            match ch {
                'X' => {
                    body.insert(to_cell(r, c));
                }
                '#' => {
                    marked.insert(to_cell(r, c));
                }
                _ => {}
            }
        }
    }
    let has_body = !body.is_empty();
    if !has_body {
        for x in lb.x + 1..rb.x {
            for y in 0..body_rows.max(1) as i32 {
                body.insert(Cell::new(x, y));
            }
        }
    }
    let lattice = Lattice::new([(Side::Left, lb), (Side::Right, rb)], body)?;
    if !lattice.is_connected(None) {
        return Err(PlannerError::Parse { line: 0, msg: "the body must join both base modules".into() });
    }
    let mid2 = lb.x + rb.x;
    let mut targets = Targets::new();
    for c in marked {
        let side = if 2 * c.x < mid2 { Side::Left } else { Side::Right };
        targets.entry(side).or_default().insert(c);
    }
    Ok(TargetGrid { lattice, targets, has_body })
}

/// Renders a lattice as a grid in the same alphabet, `#` for modules.
pub fn render_grid(lat: &Lattice) -> String {
    let mut cells: BTreeSet<Cell> = lat.occupied_cells();
    cells.extend(lat.base_cells());
    cells.extend(lat.body_cells().iter().copied());
    let (Some(x0), Some(x1)) = (cells.iter().map(|c| c.x).min(), cells.iter().map(|c| c.x).max()) else {
        return String::new();
    };
    let y0 = cells.iter().map(|c| c.y).min().unwrap_or(0);
    let y1 = cells.iter().map(|c| c.y).max().unwrap_or(0);
    let mut out = String::new();
    for y in (y0..=y1).rev() {
        for x in x0..=x1 {
            let c = Cell::new(x, y);
            out.push(if lat.is_base(c) {
                'B'
            } else if lat.is_body(c) {
                'X'
            } else if lat.is_occupied(c) {
                '#'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_plane_with_base() -> Lattice {
        Lattice::new([(Side::Left, Cell::new(0, 0))], []).unwrap()
    }

    #[test]
    fn lone_module_beside_base_moves() {
        let mut lat = open_plane_with_base();
        lat.place(Cell::new(1, 0), ModuleId(1)).unwrap();
        let got: BTreeSet<(MoveKind, Cell)> =
            feasible_moves(&lat, Cell::new(1, 0)).unwrap().iter().map(|m| (m.kind, m.to)).collect();
        // brute force from the definitions: destinations must touch the base
        let want = BTreeSet::from([
            (MoveKind::Pivot90, Cell::new(0, 1)),
            (MoveKind::Pivot90, Cell::new(0, -1)),
            (MoveKind::Pivot180, Cell::new(-1, 0)),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn enclosed_mover_has_no_moves() {
        let mut lat = open_plane_with_base();
        let c = Cell::new(1, 1);
        lat.place(c, ModuleId(0)).unwrap();
        for (i, n) in [(0, 1), (1, 0), (2, 1), (1, 2), (2, 0), (2, 2)].into_iter().enumerate() {
            lat.place(Cell::new(n.0, n.1), ModuleId(i as u32 + 1)).unwrap();
        }
        let moves = feasible_moves(&lat, c).unwrap();
        assert!(moves.is_empty(), "{moves:?}");
    }

    #[test]
    fn articulation_cell_would_disconnect() {
        let mut lat = open_plane_with_base();
        for x in 1..=3 {
            lat.place(Cell::new(x, 0), ModuleId(x as u32)).unwrap();
        }
        assert_eq!(feasible_moves(&lat, Cell::new(2, 0)), Err(PlannerError::WouldDisconnect(Cell::new(2, 0))));
        assert_eq!(feasible_moves(&lat, Cell::new(9, 9)), Err(PlannerError::NotOccupied(Cell::new(9, 9))));
    }

    #[test]
    fn identity_and_body_targets() {
        let mut lat = Lattice::for_satellite(2, 2);
        lat.place(Cell::new(3, 0), ModuleId(1)).unwrap();
        assert!(plan_path(&lat, Cell::new(3, 0), Cell::new(3, 0)).unwrap().is_empty());
        assert!(matches!(
            plan_path(&lat, Cell::new(3, 0), Cell::new(1, 1)),
            Err(PlannerError::Unreachable { .. })
        ));
    }

    #[test]
    fn chain_end_walks_past_far_end() {
        let mut lat = open_plane_with_base();
        for x in 1..=3 {
            lat.place(Cell::new(x, 0), ModuleId(x as u32)).unwrap();
        }
        let plan = plan_path(&lat, Cell::new(3, 0), Cell::new(-1, 0)).unwrap();
        let end = validate_plan(&lat, &plan).unwrap();
        assert_eq!(end.module_at(Cell::new(-1, 0)), Some(ModuleId(3)));
        let mut lat = open_plane_with_base();
        lat.place(Cell::new(1, 0), ModuleId(1)).unwrap();
        lat.place(Cell::new(2, 0), ModuleId(2)).unwrap();
        lat.place(Cell::new(-1, 0), ModuleId(3)).unwrap();
        let plan = plan_path(&lat, Cell::new(2, 0), Cell::new(-2, 0)).unwrap();
        let end = validate_plan(&lat, &plan).unwrap();
        assert_eq!(end.module_at(Cell::new(-2, 0)), Some(ModuleId(2)));
    }

    #[test]
    fn plan_text_round_trip() {
        let mut lat = Lattice::for_satellite(2, 2);
        let t = default_targets(&lat, 6);
        let ids: Vec<ModuleId> = (1..=6).map(ModuleId).collect();
        let plan = assembly_plan(&lat, &t, &ids).unwrap();
        let back = Plan::parse(&plan.to_string(), Provenance::Assembly).unwrap();
        assert_eq!(back, plan);
        lat = validate_plan(&lat, &back).unwrap();
        assert_eq!(lat.len(), 6);
    }

    #[test]
    fn invalid_step_reported() {
        let mut lat = Lattice::for_satellite(2, 2);
        lat.place(Cell::new(3, 0), ModuleId(1)).unwrap();
        lat.place(Cell::new(4, 0), ModuleId(2)).unwrap();
        let bad = Plan {
            steps: vec![(ModuleId(2), Move { kind: MoveKind::Roll, from: Cell::new(4, 0), to: Cell::new(3, 0), anchor: Cell::new(3, 0) })],
            provenance: Provenance::Relocation,
        };
        assert!(matches!(validate_plan(&lat, &bad), Err(PlannerError::InvalidStep { index: 0, .. })));
        assert_eq!(validate_plan(&lat, &Plan::new(Provenance::Relocation)).unwrap(), lat);
    }

    #[test]
    fn one_per_side_alternates() {
        let lat = Lattice::for_satellite(2, 2);
        let t = arm_targets(&lat, 1, 1);
        let plan = assembly_plan(&lat, &t, &[ModuleId(1), ModuleId(2)]).unwrap();
        let places: Vec<Cell> =
            plan.steps.iter().filter(|(_, m)| m.kind == MoveKind::Place).map(|(_, m)| m.to).collect();
        assert_eq!(places, vec![Cell::new(2, 0), Cell::new(-1, 0)]);
        assert!(matches!(
            assembly_plan(&lat, &t, &[ModuleId(1)]),
            Err(PlannerError::InsufficientModules { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn mirrored_arrays_assemble() {
        let lat = Lattice::for_satellite(2, 2);
        let t = mirrored_array_targets(&lat);
        let n: usize = t.values().map(BTreeSet::len).sum();
        assert_eq!(n, 38);
        let ids: Vec<ModuleId> = (1..=38).map(ModuleId).collect();
        let plan = assembly_plan(&lat, &t, &ids).unwrap();
        let end = validate_plan(&lat, &plan).unwrap();
        let want: BTreeSet<Cell> = t.values().flatten().copied().collect();
        assert_eq!(end.occupied_cells(), want);
    }

    #[test]
    fn replacement_cases() {
        let lat0 = Lattice::for_satellite(2, 2);
        let t = arm_targets(&lat0, 3, 3);
        let ids: Vec<ModuleId> = (1..=6).map(ModuleId).collect();
        let lat = validate_plan(&lat0, &assembly_plan(&lat0, &t, &ids).unwrap()).unwrap();

        // free end of the right arm
        let end_id = lat.module_at(Cell::new(5, 0)).unwrap();
        let plan = replacement_plan(&lat, end_id, ModuleId(99)).unwrap();
        let after = validate_plan(&lat, &plan).unwrap();
        let slot = after.position(ModuleId(99)).unwrap();
        assert!(slot.is_edge_adjacent(Cell::new(5, 0)));
        assert_eq!(after.position(end_id), Some(Cell::new(5, 0)));

        // slot right beside the base: one unfold after the place
        let mut lat = lat0.clone();
        lat.place(Cell::new(3, 0), ModuleId(1)).unwrap();
        lat.place(Cell::new(3, 1), ModuleId(2)).unwrap();
        let plan = replacement_plan(&lat, ModuleId(2), ModuleId(99)).unwrap();
        assert_eq!(plan.steps[1].1.to, Cell::new(2, 1));
        assert_eq!(plan.len(), 2);
        assert_eq!(plan.steps[1].1.kind, MoveKind::Unfold);
    }

    #[test]
    fn enclosed_failed_module_has_no_slot() {
        let mut lat = Lattice::for_satellite(2, 2);
        let c = Cell::new(4, 0);
        lat.place(c, ModuleId(1)).unwrap();
        for (i, n) in c.neighbors4().into_iter().enumerate() {
            lat.place(n, ModuleId(10 + i as u32)).unwrap();
        }
        assert_eq!(replacement_plan(&lat, ModuleId(1), ModuleId(99)), Err(PlannerError::NoAdjacentSlot(ModuleId(1))));
    }

    #[test]
    fn grid_parsing() {
        let g = parse_target_grid("...........\n.##B..B##..\n", 2).unwrap();
        assert_eq!(g.lattice.base(Side::Left), Some(Cell::new(-1, 0)));
        assert_eq!(g.lattice.base(Side::Right), Some(Cell::new(2, 0)));
        assert_eq!(g.targets[&Side::Left], BTreeSet::from([Cell::new(-3, 0), Cell::new(-2, 0)]));
        assert_eq!(g.targets[&Side::Right], BTreeSet::from([Cell::new(3, 0), Cell::new(4, 0)]));
        assert!(g.lattice.is_body(Cell::new(0, 1)));
        assert!(parse_target_grid("B..\n", 1).is_err());
    }
}
