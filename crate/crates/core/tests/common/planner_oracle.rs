//! Brute-force shortest single-mover paths over full configuration states.
//!
//! Shares nothing with the planner beyond the `Lattice` container: moves are
//! enumerated by trying every (kind, destination, anchor) triple on the
//! board against the move definitions, and connectivity is recomputed by
//! flood fill for every state.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use sspare::model::{Bounds, Cell, Lattice, ModuleId, Side};
use sspare::planner::MoveKind;

pub const BOARD: i32 = 8;

#[derive(Clone, Debug)]
pub struct World {
    pub bases: BTreeSet<Cell>,
    pub body: BTreeSet<Cell>,
}

impl World {
    fn on_board(&self, c: Cell) -> bool {
        (0..BOARD).contains(&c.x) && (0..BOARD).contains(&c.y)
    }

    fn free(&self, occ: &BTreeSet<Cell>, c: Cell) -> bool {
        self.on_board(c) && !occ.contains(&c) && !self.body.contains(&c) && !self.bases.contains(&c)
    }

    pub fn connected(&self, occ: &BTreeSet<Cell>) -> bool {
        let nodes: BTreeSet<Cell> =
            occ.iter().chain(self.bases.iter()).chain(self.body.iter()).copied().collect();
        let Some(&s) = nodes.iter().next() else { return true };
        let mut seen = BTreeSet::from([s]);
        let mut stack = vec![s];
        while let Some(c) = stack.pop() {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = Cell::new(c.x + dx, c.y + dy);
                if nodes.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.len() == nodes.len()
    }

    fn adjacent(a: Cell, b: Cell) -> bool {
        (a.x - b.x).abs() + (a.y - b.y).abs() == 1
    }

    /// Destinations reachable in one legal move of the module at `from`.
    pub fn successors(&self, occ: &BTreeSet<Cell>, from: Cell) -> BTreeSet<(MoveKind, Cell, Cell)> {
        let mut rest = occ.clone();
        rest.remove(&from);
        let mut out = BTreeSet::new();
        if !self.connected(&rest) {
            return out;
        }
        let anchor_ok = |a: Cell| rest.contains(&a) || self.bases.contains(&a);
        let mut cells = Vec::new();
        for x in -1..=BOARD {
            for y in -1..=BOARD {
                cells.push(Cell::new(x, y));
            }
        }
        for &to in &cells {
            if !self.free(&rest, to) {
                continue;
            }
            let attached = cells.iter().any(|&n| Self::adjacent(n, to) && anchor_ok(n));
            if !attached {
                continue;
            }
            for &a in &cells {
                let dx = to.x - from.x;
                let dy = to.y - from.y;
                if self.bases.contains(&from) {
                    if a == from && Self::adjacent(from, to) {
                        out.insert((MoveKind::Unfold, to, a));
                    }
                    continue;
                }
                if !anchor_ok(a) {
                    continue;
                }
                if dx.abs() == 1 && dy.abs() == 1 && Self::adjacent(a, from) && Self::adjacent(a, to) {
                    let other = Cell::new(from.x + to.x - a.x, from.y + to.y - a.y);
                    if self.free(&rest, other) {
                        out.insert((MoveKind::Pivot90, to, a));
                    }
                }
                let straight2 = (dx.abs() == 2 && dy == 0) || (dy.abs() == 2 && dx == 0);
                if straight2 && a == Cell::new(from.x + dx / 2, from.y + dy / 2) {
                    let sides = if dx != 0 { [(0, 1), (0, -1)] } else { [(1, 0), (-1, 0)] };
                    let clear = sides.iter().any(|&(sx, sy)| {
                        [from, a, to].iter().all(|c| self.free(&rest, Cell::new(c.x + sx, c.y + sy)))
                    });
                    if clear {
                        out.insert((MoveKind::Pivot180, to, a));
                    }
                }
                if Self::adjacent(from, to) && Self::adjacent(a, from) {
                    let (ax, ay) = (a.x - from.x, a.y - from.y);
                    if ax * dx + ay * dy == 0 {
                        out.insert((MoveKind::Roll, to, a));
                    }
                }
            }
        }
        out
    }

    /// Shortest move count for the module at `from` to reach `to`.
    pub fn shortest(&self, occ: &BTreeSet<Cell>, from: Cell, to: Cell) -> Option<usize> {
        let start = occ.clone();
        let mut seen: BTreeMap<BTreeSet<Cell>, usize> = BTreeMap::from([(start.clone(), 0)]);
        let mut queue = VecDeque::from([(start, from)]);
        while let Some((state, pos)) = queue.pop_front() {
            let d = seen[&state];
            if pos == to {
                return Some(d);
            }
            for (_, dest, _) in self.successors(&state, pos) {
                let mut next = state.clone();
                next.remove(&pos);
                next.insert(dest);
                if !seen.contains_key(&next) {
                    seen.insert(next.clone(), d + 1);
                    queue.push_back((next, dest));
                }
            }
        }
        None
    }

    pub fn lattice(&self, occ: &BTreeSet<Cell>) -> Lattice {
        let sides = [Side::Left, Side::Right];
        let mut lat = Lattice::new(self.bases.iter().zip(sides).map(|(c, s)| (s, *c)), self.body.iter().copied())
            .unwrap()
            .with_bounds(Bounds { min: Cell::new(0, 0), max: Cell::new(BOARD - 1, BOARD - 1) });
        for (i, c) in occ.iter().enumerate() {
            lat.place(*c, ModuleId(i as u32 + 1)).unwrap();
        }
        lat
    }
}

pub struct Instance {
    pub world: World,
    pub occ: BTreeSet<Cell>,
    pub mover: Cell,
    pub target: Cell,
}

/// Random connected configuration of 1..=6 modules grown from one base
/// cell, sometimes next to a small body block, with a non-articulation
/// mover and a random free target.
pub fn random_instance<R: Rng>(rng: &mut R) -> Option<Instance> {
    let base = Cell::new(rng.gen_range(0..BOARD), rng.gen_range(0..BOARD));
    let mut body = BTreeSet::new();
    if rng.gen_bool(0.3) {
        let (dx, dy) = *[(1, 0), (-1, 0), (0, 1), (0, -1)].choose(rng).unwrap();
        for k in 1..=2 {
            let c = Cell::new(base.x + dx * k, base.y + dy * k);
            if (0..BOARD).contains(&c.x) && (0..BOARD).contains(&c.y) {
                body.insert(c);
            }
        }
    }
    let world = World { bases: BTreeSet::from([base]), body };
    let n = rng.gen_range(1..=6);
    let mut occ = BTreeSet::new();
    for _ in 0..n {
        let mut frontier: Vec<Cell> = occ
            .iter()
            .chain(world.bases.iter())
            .flat_map(|c: &Cell| c.neighbors4())
            .filter(|c| world.free(&occ, *c))
            .collect();
        frontier.sort();
        frontier.dedup();
        let c = *frontier.choose(rng)?;
        occ.insert(c);
    }
    let movers: Vec<Cell> = occ
        .iter()
        .copied()
        .filter(|c| {
            let mut r = occ.clone();
            r.remove(c);
            world.connected(&r)
        })
        .collect();
    let mover = *movers.choose(rng)?;
    let mut free: Vec<Cell> = (0..BOARD)
        .flat_map(|x| (0..BOARD).map(move |y| Cell::new(x, y)))
        .filter(|c| world.free(&occ, *c))
        .collect();
    free.sort();
    let target = *free.choose(rng)?;
    Some(Instance { world, occ, mover, target })
}

/// Straight chains of 1..=6 modules running right from a base at (1, 3),
/// the far end as mover, paired with every free board cell.
pub fn chain_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for n in 1..=6 {
        let base = Cell::new(1, 3);
        let world = World { bases: BTreeSet::from([base]), body: BTreeSet::new() };
        let occ: BTreeSet<Cell> = (1..=n).map(|k| Cell::new(1 + k, 3)).collect();
        let mover = Cell::new(1 + n, 3);
        for x in 0..BOARD {
            for y in 0..BOARD {
                let t = Cell::new(x, y);
                if world.free(&occ, t) {
                    out.push(Instance { world: world.clone(), occ: occ.clone(), mover, target: t });
                }
            }
        }
    }
    out
}

/// Runs the planner on one instance and compares against the oracle.
/// Also replays the plan, checking connectivity and attachment after every
/// step with the oracle's own flood fill.
pub fn check(inst: &Instance) -> Result<(), String> {
    use sspare::planner::{plan_path, validate_plan, PlannerError};

    let lat = inst.world.lattice(&inst.occ);
    let want = inst.world.shortest(&inst.occ, inst.mover, inst.target);
    let got = plan_path(&lat, inst.mover, inst.target);
    match (&got, want) {
        (Ok(plan), Some(n)) if plan.len() == n => {}
        (Err(PlannerError::Unreachable { .. }), None) => return Ok(()),
        _ => {
            return Err(format!(
                "occ {:?} bases {:?} body {:?} mover {} target {}: planner {:?}, oracle {:?}",
                inst.occ, inst.world.bases, inst.world.body, inst.mover, inst.target,
                got.as_ref().map(|p| p.len()), want
            ))
        }
    }
    let plan = got.unwrap();
    validate_plan(&lat, &plan).map_err(|e| format!("replay failed: {e}"))?;
    let mut occ = inst.occ.clone();
    for (_, mv) in &plan.steps {
        let legal = inst.world.successors(&occ, mv.from);
        if !legal.contains(&(mv.kind, mv.to, mv.anchor)) {
            return Err(format!("oracle rejects step {mv:?}"));
        }
        occ.remove(&mv.from);
        occ.insert(mv.to);
        if !inst.world.connected(&occ) {
            return Err(format!("disconnected after {mv:?}"));
        }
        let attached = mv.to.neighbors4().iter().any(|n| occ.contains(n) || inst.world.bases.contains(n));
        if !attached {
            return Err(format!("mover detached after {mv:?}"));
        }
    }
    if !occ.contains(&inst.target) {
        return Err("plan does not end on the target".into());
    }
    Ok(())
}
