//! The space data model and its edit semantics.

mod grid;
mod space;

pub use grid::{quantize4, Cell, GridSpec, WorldPoint, MAX_CELL_SIZE, MAX_GRID_DIM, MIN_CELL_SIZE};
pub use space::{
    validate_space, ItemKind, Orientation, PlacedItem, Space, Terrain, TimeOfDay, Violation,
    WallEdge, MAX_ITEMS_PER_CELL,
};
