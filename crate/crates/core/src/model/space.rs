use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::{quantize4, Cell, GridSpec};
use crate::error::SceneError;

/// Maximum number of items stacked on one cell.
pub const MAX_ITEMS_PER_CELL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Grass,
    Rock,
    Water,
}

impl Terrain {
    pub const ALL: [Terrain; 3] = [Terrain::Grass, Terrain::Rock, Terrain::Water];

    /// Next texture in the editor's click cycle.
    pub fn next(self) -> Terrain {
        match self {
            Terrain::Grass => Terrain::Rock,
            Terrain::Rock => Terrain::Water,
            Terrain::Water => Terrain::Grass,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Terrain::Grass => "g",
            Terrain::Rock => "r",
            Terrain::Water => "w",
        }
    }

    pub fn from_code(code: &str) -> Option<Terrain> {
        match code {
            "g" => Some(Terrain::Grass),
            "r" => Some(Terrain::Rock),
            "w" => Some(Terrain::Water),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeOfDay {
    Morning,
    Dusk,
    Night,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 3] = [TimeOfDay::Morning, TimeOfDay::Dusk, TimeOfDay::Night];

    pub fn next(self) -> TimeOfDay {
        match self {
            TimeOfDay::Morning => TimeOfDay::Dusk,
            TimeOfDay::Dusk => TimeOfDay::Night,
            TimeOfDay::Night => TimeOfDay::Morning,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeOfDay::Morning => "morning",
            TimeOfDay::Dusk => "dusk",
            TimeOfDay::Night => "night",
        }
    }

    pub fn from_name(name: &str) -> Option<TimeOfDay> {
        TimeOfDay::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Runs along the north side of cell `(x, y)`.
    H,
    /// Runs along the west side of cell `(x, y)`.
    V,
}

impl Orientation {
    pub fn code(self) -> &'static str {
        match self {
            Orientation::H => "H",
            Orientation::V => "V",
        }
    }

    pub fn from_code(code: &str) -> Option<Orientation> {
        match code {
            "H" => Some(Orientation::H),
            "V" => Some(Orientation::V),
            _ => None,
        }
    }
}

/// One grid line segment that can carry a wall. Ordering is (orientation, x, y),
/// which is also the canonical file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WallEdge {
    pub orientation: Orientation,
    pub x: u32,
    pub y: u32,
}

impl WallEdge {
    pub const fn h(x: u32, y: u32) -> Self {
        WallEdge {
            orientation: Orientation::H,
            x,
            y,
        }
    }

    pub const fn v(x: u32, y: u32) -> Self {
        WallEdge {
            orientation: Orientation::V,
            x,
            y,
        }
    }

    /// Boundary edges are valid: H rows run `0..=height`, V columns `0..=width`.
    pub fn in_bounds(&self, grid: &GridSpec) -> bool {
        match self.orientation {
            Orientation::H => self.x < grid.width && self.y <= grid.height,
            Orientation::V => self.x <= grid.width && self.y < grid.height,
        }
    }
}

/// Item catalog, version 1. Every kind occupies a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Tree,
    Boulder,
    Bench,
    FlowerPatch,
    Statue,
    Well,
}

impl ItemKind {
    pub const ALL: [ItemKind; 6] = [
        ItemKind::Tree,
        ItemKind::Boulder,
        ItemKind::Bench,
        ItemKind::FlowerPatch,
        ItemKind::Statue,
        ItemKind::Well,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Tree => "tree",
            ItemKind::Boulder => "boulder",
            ItemKind::Bench => "bench",
            ItemKind::FlowerPatch => "flower_patch",
            ItemKind::Statue => "statue",
            ItemKind::Well => "well",
        }
    }

    pub fn from_name(name: &str) -> Option<ItemKind> {
        ItemKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacedItem {
    pub id: u64,
    pub kind: ItemKind,
    pub cell: Cell,
}

/// The authoritative scene.
///
/// Fields are public so decoders and tests can build arbitrary (possibly
/// invalid) values; [`validate_space`] reports whatever invariants such a
/// value breaks. The edit methods keep a valid space valid and are atomic:
/// on error nothing changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub space_id: String,
    pub name: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub terrain: Vec<Terrain>,
    pub walls: BTreeSet<WallEdge>,
    /// Ascending by id.
    pub items: Vec<PlacedItem>,
    pub time_of_day: TimeOfDay,
    /// Per-cell wear in `[0, 1]` on the 1e-4 lattice, row-major.
    pub residue: Vec<f64>,
    pub next_item_id: u64,
    pub op_seq: u64,
}

impl Space {
    pub fn new(
        space_id: impl Into<String>,
        name: impl Into<String>,
        seed: u64,
        grid: GridSpec,
    ) -> Result<Space, SceneError> {
        grid.check()?;
        let n = grid.cell_count();
        Ok(Space {
            space_id: space_id.into(),
            name: name.into(),
            seed,
            grid,
            terrain: vec![Terrain::Grass; n],
            walls: BTreeSet::new(),
            items: Vec::new(),
            time_of_day: TimeOfDay::Morning,
            residue: vec![0.0; n],
            next_item_id: 1,
            op_seq: 0,
        })
    }

    pub fn terrain_at(&self, cell: Cell) -> Result<Terrain, SceneError> {
        Ok(self.terrain[self.grid.index(cell)?])
    }

    pub fn wear_at(&self, cell: Cell) -> Result<f64, SceneError> {
        Ok(self.residue[self.grid.index(cell)?])
    }

    pub fn item(&self, id: u64) -> Option<&PlacedItem> {
        self.items
            .binary_search_by_key(&id, |it| it.id)
            .ok()
            .map(|i| &self.items[i])
    }

    pub fn items_at(&self, cell: Cell) -> impl Iterator<Item = &PlacedItem> {
        self.items.iter().filter(move |it| it.cell == cell)
    }

    pub fn has_wall(&self, edge: WallEdge) -> bool {
        self.walls.contains(&edge)
    }

    pub fn set_terrain(&mut self, cell: Cell, terrain: Terrain) -> Result<(), SceneError> {
        let i = self.grid.index(cell)?;
        self.terrain[i] = terrain;
        Ok(())
    }

    pub fn set_wall(&mut self, edge: WallEdge, present: bool) -> Result<(), SceneError> {
        if !edge.in_bounds(&self.grid) {
            return Err(SceneError::OutOfBounds);
        }
        if present {
            self.walls.insert(edge);
        } else {
            self.walls.remove(&edge);
        }
        Ok(())
    }

    /// Places a new item and returns the id it was issued.
    pub fn place_item(&mut self, kind: ItemKind, cell: Cell) -> Result<u64, SceneError> {
        self.grid.index(cell)?;
        if self.items_at(cell).count() >= MAX_ITEMS_PER_CELL {
            return Err(SceneError::CellFull);
        }
        let id = self.next_item_id;
        self.items.push(PlacedItem { id, kind, cell });
        self.next_item_id += 1;
        Ok(id)
    }

    pub fn move_item(&mut self, id: u64, to: Cell) -> Result<(), SceneError> {
        let pos = self
            .items
            .binary_search_by_key(&id, |it| it.id)
            .map_err(|_| SceneError::NoSuchItem(id))?;
        self.grid.index(to)?;
        let occupants = self
            .items
            .iter()
            .filter(|it| it.cell == to && it.id != id)
            .count();
        if occupants >= MAX_ITEMS_PER_CELL {
            return Err(SceneError::CellFull);
        }
        self.items[pos].cell = to;
        Ok(())
    }

    /// Removes an item. Its id is never issued again.
    pub fn remove_item(&mut self, id: u64) -> Result<(), SceneError> {
        let pos = self
            .items
            .binary_search_by_key(&id, |it| it.id)
            .map_err(|_| SceneError::NoSuchItem(id))?;
        self.items.remove(pos);
        Ok(())
    }

    pub fn set_time_of_day(&mut self, t: TimeOfDay) {
        self.time_of_day = t;
    }

    /// Overwrites the wear of one cell, clamped to `[0, 1]` and snapped to the 1e-4 lattice.
    pub fn set_wear(&mut self, cell: Cell, wear: f64) -> Result<(), SceneError> {
        let i = self.grid.index(cell)?;
        let w = if wear.is_nan() {
            0.0
        } else {
            wear.clamp(0.0, 1.0)
        };
        self.residue[i] = quantize4(w);
        Ok(())
    }
}

/// One broken [`Space`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidGrid(String),
    TerrainLength { expected: usize, actual: usize },
    ResidueLength { expected: usize, actual: usize },
    ResidueOutOfRange { index: usize, value: f64 },
    WallOutOfBounds(WallEdge),
    ItemOutOfBounds { id: u64, cell: Cell },
    ItemIdZero,
    ItemsNotAscending { id: u64 },
    ItemIdNotIssued { id: u64, next_item_id: u64 },
    NextItemIdZero,
    CellOverCapacity { cell: Cell, count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Violation::TerrainLength { expected, actual } => {
                write!(f, "terrain length {actual}, expected {expected}")
            }
            Violation::ResidueLength { expected, actual } => {
                write!(f, "residue length {actual}, expected {expected}")
            }
            Violation::ResidueOutOfRange { index, value } => {
                write!(f, "residue out of range at index {index}: {value}")
            }
            Violation::WallOutOfBounds(e) => {
                write!(
                    f,
                    "wall out of bounds: {}({},{})",
                    e.orientation.code(),
                    e.x,
                    e.y
                )
            }
            Violation::ItemOutOfBounds { id, cell } => {
                write!(f, "item out of bounds: id {id} at ({},{})", cell.x, cell.y)
            }
            Violation::ItemIdZero => write!(f, "item id 0 is reserved"),
            Violation::ItemsNotAscending { id } => {
                write!(f, "items not in strictly ascending id order at id {id}")
            }
            Violation::ItemIdNotIssued { id, next_item_id } => {
                write!(f, "item id {id} not below next_item_id {next_item_id}")
            }
            Violation::NextItemIdZero => write!(f, "next_item_id must be positive"),
            Violation::CellOverCapacity { cell, count } => {
                write!(f, "cell ({},{}) holds {count} items", cell.x, cell.y)
            }
        }
    }
}

/// Checks every invariant of `space` and returns all violations found.
pub fn validate_space(space: &Space) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let grid_ok = match space.grid.check() {
        Ok(()) => true,
        Err(e) => {
            out.push(Violation::InvalidGrid(e.to_string()));
            false
        }
    };
    let n = space.grid.cell_count();
    if space.terrain.len() != n {
        out.push(Violation::TerrainLength {
            expected: n,
            actual: space.terrain.len(),
        });
    }
    if space.residue.len() != n {
        out.push(Violation::ResidueLength {
            expected: n,
            actual: space.residue.len(),
        });
    }
    for (index, &value) in space.residue.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            out.push(Violation::ResidueOutOfRange { index, value });
        }
    }
    if grid_ok {
        for edge in space.walls.iter().filter(|e| !e.in_bounds(&space.grid)) {
            out.push(Violation::WallOutOfBounds(*edge));
        }
    }
    if space.next_item_id == 0 {
        out.push(Violation::NextItemIdZero);
    }
    let mut prev = 0u64;
    let mut per_cell = std::collections::BTreeMap::<Cell, usize>::new();
    for item in &space.items {
        if item.id == 0 {
            out.push(Violation::ItemIdZero);
        } else if item.id <= prev {
            out.push(Violation::ItemsNotAscending { id: item.id });
        }
        prev = prev.max(item.id);
        if item.id >= space.next_item_id {
            out.push(Violation::ItemIdNotIssued {
                id: item.id,
                next_item_id: space.next_item_id,
            });
        }
        if !space.grid.contains(item.cell) {
            out.push(Violation::ItemOutOfBounds {
                id: item.id,
                cell: item.cell,
            });
        }
        *per_cell.entry(item.cell).or_default() += 1;
    }
    for (cell, count) in per_cell {
        if count > MAX_ITEMS_PER_CELL {
            out.push(Violation::CellOverCapacity { cell, count });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> Space {
        Space::new("s1", "demo", 42, GridSpec::default()).unwrap()
    }

    #[test]
    fn new_space_defaults() {
        let s = fresh();
        assert_eq!(s.terrain.len(), 256);
        assert!(s.terrain.iter().all(|t| *t == Terrain::Grass));
        assert!(s.items.is_empty() && s.walls.is_empty());
        assert_eq!(s.time_of_day, TimeOfDay::Morning);
        assert!(s.residue.iter().all(|w| *w == 0.0));
        assert_eq!((s.next_item_id, s.op_seq), (1, 0));

        let tiny = Space::new("t", "tiny", 0, GridSpec::new(1, 1, 2.0).unwrap()).unwrap();
        assert_eq!(tiny.terrain, vec![Terrain::Grass]);

        let bad = GridSpec {
            width: 300,
            height: 16,
            cell_size: 2.0,
        };
        assert!(matches!(
            Space::new("x", "x", 0, bad),
            Err(SceneError::InvalidGrid(_))
        ));
    }

    #[test]
    fn terrain_cycle_and_absolute_writes() {
        assert_eq!(Terrain::Grass.next(), Terrain::Rock);
        assert_eq!(Terrain::Rock.next(), Terrain::Water);
        assert_eq!(Terrain::Water.next(), Terrain::Grass);

        let mut s = fresh();
        let c = Cell::new(2, 3);
        s.set_terrain(c, Terrain::Rock).unwrap();
        assert_eq!(s.terrain_at(c), Ok(Terrain::Rock));
        s.set_terrain(c, Terrain::Water).unwrap();
        s.set_terrain(c, Terrain::Grass).unwrap();
        assert_eq!(s.terrain_at(c), Ok(Terrain::Grass));

        let before = s.clone();
        assert_eq!(
            s.set_terrain(Cell::new(16, 0), Terrain::Rock),
            Err(SceneError::OutOfBounds)
        );
        assert_eq!(s, before);
    }

    #[test]
    fn walls_are_a_set() {
        let mut s = fresh();
        let e = WallEdge::h(1, 1);
        s.set_wall(e, true).unwrap();
        s.set_wall(e, true).unwrap();
        assert_eq!(s.walls.len(), 1);
        s.set_wall(e, false).unwrap();
        assert!(!s.has_wall(e));
        assert_eq!(
            s.set_wall(WallEdge::v(17, 0), true),
            Err(SceneError::OutOfBounds)
        );
        // boundary edges
        assert!(s.set_wall(WallEdge::v(16, 0), true).is_ok());
        assert!(s.set_wall(WallEdge::h(0, 16), true).is_ok());
        assert_eq!(
            s.set_wall(WallEdge::h(16, 0), true),
            Err(SceneError::OutOfBounds)
        );
        assert_eq!(
            s.set_wall(WallEdge::v(0, 16), true),
            Err(SceneError::OutOfBounds)
        );
    }

    #[test]
    fn item_ids_and_capacity() {
        let mut s = fresh();
        assert_eq!(s.place_item(ItemKind::Tree, Cell::new(3, 2)), Ok(1));
        assert_eq!(s.next_item_id, 2);

        let c = Cell::new(5, 5);
        for _ in 0..MAX_ITEMS_PER_CELL {
            s.place_item(ItemKind::FlowerPatch, c).unwrap();
        }
        let before = s.clone();
        assert_eq!(
            s.place_item(ItemKind::FlowerPatch, c),
            Err(SceneError::CellFull)
        );
        assert_eq!(s, before);

        let mut tiny = Space::new("t", "tiny", 0, GridSpec::new(1, 1, 2.0).unwrap()).unwrap();
        assert_eq!(tiny.place_item(ItemKind::Well, Cell::new(0, 0)), Ok(1));
        assert_eq!(
            tiny.place_item(ItemKind::Well, Cell::new(1, 0)),
            Err(SceneError::OutOfBounds)
        );
    }

    #[test]
    fn move_semantics() {
        let mut s = fresh();
        let id = s.place_item(ItemKind::Tree, Cell::new(3, 2)).unwrap();
        s.move_item(id, Cell::new(3, 3)).unwrap();
        assert_eq!(s.item(id).unwrap().cell, Cell::new(3, 3));
        assert_eq!(s.item(id).unwrap().kind, ItemKind::Tree);
        assert_eq!(
            s.move_item(99, Cell::new(0, 0)),
            Err(SceneError::NoSuchItem(99))
        );
        let before = s.clone();
        s.move_item(id, Cell::new(3, 3)).unwrap();
        assert_eq!(s, before);
        assert_eq!(
            s.move_item(id, Cell::new(0, 16)),
            Err(SceneError::OutOfBounds)
        );

        // a full destination rejects, but a full cell accepts its own occupant
        let full = Cell::new(0, 0);
        for _ in 0..MAX_ITEMS_PER_CELL {
            s.place_item(ItemKind::FlowerPatch, full).unwrap();
        }
        assert_eq!(s.move_item(id, full), Err(SceneError::CellFull));
        let last = s.items.last().unwrap().id;
        assert!(s.move_item(last, full).is_ok());
    }

    #[test]
    fn removed_ids_are_not_reused() {
        let mut s = fresh();
        assert_eq!(s.remove_item(1), Err(SceneError::NoSuchItem(1)));
        let a = s.place_item(ItemKind::Bench, Cell::new(0, 0)).unwrap();
        s.remove_item(a).unwrap();
        assert_eq!(s.remove_item(a), Err(SceneError::NoSuchItem(a)));
        let b = s.place_item(ItemKind::Bench, Cell::new(0, 0)).unwrap();
        assert_eq!((a, b), (1, 2));
    }

    #[test]
    fn time_of_day_cycle() {
        assert_eq!(TimeOfDay::Morning.next(), TimeOfDay::Dusk);
        assert_eq!(TimeOfDay::Dusk.next(), TimeOfDay::Night);
        assert_eq!(TimeOfDay::Night.next(), TimeOfDay::Morning);
        let mut s = fresh();
        s.set_time_of_day(TimeOfDay::Dusk);
        assert_eq!(s.time_of_day, TimeOfDay::Dusk);
        s.set_time_of_day(TimeOfDay::Dusk);
        assert_eq!(s.time_of_day, TimeOfDay::Dusk);
    }

    #[test]
    fn validation_reports_everything() {
        assert_eq!(validate_space(&fresh()), Ok(()));

        let mut s = fresh();
        s.residue[0] = 1.5;
        s.items.push(PlacedItem {
            id: 1,
            kind: ItemKind::Tree,
            cell: Cell::new(99, 0),
        });
        let v = validate_space(&s).unwrap_err();
        let text: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        assert!(text.iter().any(|t| t.starts_with("residue out of range")));
        assert!(text.iter().any(|t| t.starts_with("item out of bounds")));
        // id 1 is also not below next_item_id 1
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn wear_is_clamped_and_quantized() {
        let mut s = fresh();
        let c = Cell::new(1, 1);
        s.set_wear(c, 0.012_345_6).unwrap();
        assert_eq!(s.wear_at(c), Ok(0.0123));
        s.set_wear(c, 3.0).unwrap();
        assert_eq!(s.wear_at(c), Ok(1.0));
    }
}
