//! Integer grid occupancy of deployed modules around the satellite body.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, ModuleId};

/// One lattice cell. Cells are unit squares of side `edge_length`; the
/// lattice itself is dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// Edge neighbours in fixed order: -x, +x, -y, +y.
    pub fn neighbors4(self) -> [Cell; 4] {
        [self.offset(-1, 0), self.offset(1, 0), self.offset(0, -1), self.offset(0, 1)]
    }

    pub fn is_edge_adjacent(self, other: Cell) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    pub fn is_diagonal(self, other: Cell) -> bool {
        (self.x - other.x).abs() == 1 && (self.y - other.y).abs() == 1
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Satellite side; each side owns one base module and one unloader rod.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive rectangular board limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Cell,
    pub max: Cell,
}

impl Bounds {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.min.x && c.x <= self.max.x && c.y >= self.min.y && c.y <= self.max.y
    }
}

/// Module occupancy on the integer grid.
///
/// Base cells hold the two base modules. They are static anchors and never
/// a pivot destination, but a freshly dispensed module sits on top of a base
/// cell until it unfolds, so occupancy may contain a base cell. Body cells
/// are the satellite footprint: forbidden to modules, but part of the rigid
/// structure for connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    occupancy: BTreeMap<Cell, ModuleId>,
    positions: BTreeMap<ModuleId, Cell>,
    bases: BTreeMap<Side, Cell>,
    body: BTreeSet<Cell>,
    bounds: Option<Bounds>,
}

impl Lattice {
    pub fn new(
        bases: impl IntoIterator<Item = (Side, Cell)>,
        body: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, ModelError> {
        let bases: BTreeMap<Side, Cell> = bases.into_iter().collect();
        let body: BTreeSet<Cell> = body.into_iter().collect();
        if bases.is_empty() {
            return Err(ModelError::InvalidLattice("at least one base cell is required".into()));
        }
        if let (Some(l), Some(r)) = (bases.get(&Side::Left), bases.get(&Side::Right)) {
            if l == r {
                return Err(ModelError::InvalidLattice("base cells must differ".into()));
            }
        }
        if let Some(b) = bases.values().find(|b| body.contains(b)) {
            return Err(ModelError::InvalidLattice(format!("base cell {b} lies in the body")));
        }
        Ok(Self {
            occupancy: BTreeMap::new(),
            positions: BTreeMap::new(),
            bases,
            body,
            bounds: None,
        })
    }

    /// Standard geometry: a `cols` x `rows` body rectangle with its lower-left
    /// cell at the origin, left base at (-1, 0), right base at (cols, 0).
    pub fn for_satellite(cols: u32, rows: u32) -> Self {
        let cols = cols.max(1) as i32;
        let rows = rows.max(1) as i32;
        let body = (0..cols).flat_map(|x| (0..rows).map(move |y| Cell::new(x, y)));
        Self::new([(Side::Left, Cell::new(-1, 0)), (Side::Right, Cell::new(cols, 0))], body)
            .expect("standard geometry is valid")
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    pub fn base(&self, side: Side) -> Option<Cell> {
        self.bases.get(&side).copied()
    }

    pub fn bases(&self) -> impl Iterator<Item = (Side, Cell)> + '_ {
        self.bases.iter().map(|(s, c)| (*s, *c))
    }

    pub fn base_cells(&self) -> BTreeSet<Cell> {
        self.bases.values().copied().collect()
    }

    pub fn body_cells(&self) -> &BTreeSet<Cell> {
        &self.body
    }

    pub fn is_base(&self, c: Cell) -> bool {
        self.bases.values().any(|b| *b == c)
    }

    pub fn is_body(&self, c: Cell) -> bool {
        self.body.contains(&c)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        self.bounds.is_none_or(|b| b.contains(c))
    }

    pub fn module_at(&self, c: Cell) -> Option<ModuleId> {
        self.occupancy.get(&c).copied()
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupancy.contains_key(&c)
    }

    pub fn position(&self, id: ModuleId) -> Option<Cell> {
        self.positions.get(&id).copied()
    }

    pub fn occupancy(&self) -> &BTreeMap<Cell, ModuleId> {
        &self.occupancy
    }

    pub fn occupied_cells(&self) -> BTreeSet<Cell> {
        self.occupancy.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    /// A cell a module may be moved into: on the board, empty, not body,
    /// not a base.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_occupied(c) && !self.is_body(c) && !self.is_base(c)
    }

    /// Something a module at another cell can pivot about or attach to.
    pub fn is_anchor(&self, c: Cell, mover: Option<Cell>) -> bool {
        if Some(c) == mover {
            return self.is_base(c);
        }
        self.is_occupied(c) || self.is_base(c)
    }

    /// Puts a module on a cell. Base cells are accepted (module stacked on
    /// the base module); body cells and occupied cells are not.
    pub fn place(&mut self, cell: Cell, id: ModuleId) -> Result<(), ModelError> {
        if self.is_body(cell) {
            return Err(ModelError::InvalidLattice(format!("cell {cell} is body")));
        }
        if !self.in_bounds(cell) {
            return Err(ModelError::InvalidLattice(format!("cell {cell} is off the board")));
        }
        if let Some(other) = self.module_at(cell) {
            return Err(ModelError::InvalidLattice(format!("cell {cell} already holds module {other}")));
        }
        if self.positions.contains_key(&id) {
            return Err(ModelError::InvalidLattice(format!("module {id} is already placed")));
        }
        self.occupancy.insert(cell, id);
        self.positions.insert(id, cell);
        Ok(())
    }

    pub fn remove(&mut self, cell: Cell) -> Option<ModuleId> {
        let id = self.occupancy.remove(&cell)?;
        self.positions.remove(&id);
        Some(id)
    }

    /// Relocates whatever sits on `from`; no feasibility checks.
    pub(crate) fn relocate(&mut self, from: Cell, to: Cell) {
        if let Some(id) = self.remove(from) {
            self.occupancy.insert(to, id);
            self.positions.insert(id, to);
        }
    }

    /// Edge-connectivity of occupied cells, base cells and body cells,
    /// optionally ignoring the module on `without`.
    pub fn is_connected(&self, without: Option<Cell>) -> bool {
        let mut nodes: BTreeSet<Cell> = self.occupancy.keys().copied().collect();
        if let Some(w) = without {
            nodes.remove(&w);
        }
        nodes.extend(self.bases.values().copied());
        nodes.extend(self.body.iter().copied());
        let Some(&start) = nodes.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in c.neighbors4() {
                if nodes.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == nodes.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for c in self.occupancy.keys() {
            if self.is_body(*c) {
                return Err(ModelError::InvalidLattice(format!("module on body cell {c}")));
            }
        }
        if !self.is_connected(None) {
            return Err(ModelError::InvalidLattice("configuration is not edge-connected".into()));
        }
        Ok(())
    }
}
