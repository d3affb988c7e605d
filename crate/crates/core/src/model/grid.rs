use serde::{Deserialize, Serialize};

use crate::error::SceneError;

pub const MAX_GRID_DIM: u32 = 256;
pub const MIN_CELL_SIZE: f64 = 0.5;
pub const MAX_CELL_SIZE: f64 = 10.0;

/// Rounds to the 1e-4 lattice every persisted real lives on.
pub fn quantize4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// Integer cell coordinates. `x` grows east, `y` grows south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl From<(u32, u32)> for Cell {
    fn from((x, y): (u32, u32)) -> Self {
        Cell { x, y }
    }
}

/// A point in the materialized world. `y` is up; the ground plane sits at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        WorldPoint { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Grid geometry of a space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    /// Edge length of one cell in meters, kept on the 1e-4 lattice.
    pub cell_size: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: 16,
            height: 16,
            cell_size: 2.0,
        }
    }
}

impl GridSpec {
    pub fn new(width: u32, height: u32, cell_size: f64) -> Result<Self, SceneError> {
        let grid = GridSpec {
            width,
            height,
            cell_size: quantize4(cell_size),
        };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<(), SceneError> {
        if !(1..=MAX_GRID_DIM).contains(&self.width) {
            return Err(SceneError::InvalidGrid(format!(
                "width {} outside 1..={MAX_GRID_DIM}",
                self.width
            )));
        }
        if !(1..=MAX_GRID_DIM).contains(&self.height) {
            return Err(SceneError::InvalidGrid(format!(
                "height {} outside 1..={MAX_GRID_DIM}",
                self.height
            )));
        }
        if !(self.cell_size.is_finite()
            && (MIN_CELL_SIZE..=MAX_CELL_SIZE).contains(&self.cell_size))
        {
            return Err(SceneError::InvalidGrid(format!(
                "cell_size {} outside {MIN_CELL_SIZE}..={MAX_CELL_SIZE}",
                self.cell_size
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Row-major index of `cell`.
    pub fn index(&self, cell: Cell) -> Result<usize, SceneError> {
        if self.contains(cell) {
            Ok(cell.y as usize * self.width as usize + cell.x as usize)
        } else {
            Err(SceneError::OutOfBounds)
        }
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as u32, (index / w) as u32)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    /// World extent `(x, z)` in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.cell_size,
            self.height as f64 * self.cell_size,
        )
    }

    /// Center of `cell` on the ground plane. The origin is the grid's
    /// north-west corner; world `x` follows grid `x` and world `z` follows grid `y`.
    pub fn grid_to_world(&self, cell: Cell) -> Result<WorldPoint, SceneError> {
        if !self.contains(cell) {
            return Err(SceneError::OutOfBounds);
        }
        Ok(WorldPoint::new(
            (cell.x as f64 + 0.5) * self.cell_size,
            0.0,
            (cell.y as f64 + 0.5) * self.cell_size,
        ))
    }

    /// The cell whose half-open footprint contains `p` (height is ignored).
    pub fn cell_of_world(&self, p: WorldPoint) -> Result<Cell, SceneError> {
        let (ex, ez) = self.extent();
        if !(p.x.is_finite() && p.z.is_finite()) || p.x < 0.0 || p.z < 0.0 || p.x >= ex || p.z >= ez
        {
            return Err(SceneError::OutOfBounds);
        }
        // Guard against rounding pushing a point just below the edge into the next cell.
        let cx = ((p.x / self.cell_size).floor() as u32).min(self.width - 1);
        let cz = ((p.z / self.cell_size).floor() as u32).min(self.height - 1);
        Ok(Cell::new(cx, cz))
    }
}
