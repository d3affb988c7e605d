//! Renderer-agnostic scene export.

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::canonical::Canon;
use crate::model::{quantize4, Orientation, Space, Terrain, TimeOfDay, WorldPoint};
use crate::pcg::{expand_scene, Catalog, ExpansionInstance, PcgError};

pub const SCENE_FORMAT_TAG: &str = "slowspace-scene";
pub const SCENE_FORMAT_VERSION: u64 = 1;

/// Wall height in meters.
pub const WALL_HEIGHT: f64 = 2.5;
/// Wall thickness in meters, centered on the grid line.
pub const WALL_THICKNESS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lighting {
    pub preset: TimeOfDay,
    pub sun_elevation_deg: f64,
    pub sun_azimuth_deg: f64,
    pub ambient: f64,
}

pub fn lighting_for(t: TimeOfDay) -> Lighting {
    let (sun_elevation_deg, sun_azimuth_deg, ambient) = match t {
        TimeOfDay::Morning => (25.0, 110.0, 0.45),
        TimeOfDay::Dusk => (8.0, 260.0, 0.30),
        TimeOfDay::Night => (-10.0, 0.0, 0.10),
    };
    Lighting {
        preset: t,
        sun_elevation_deg,
        sun_azimuth_deg,
        ambient,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub terrain: Terrain,
    pub wear: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSegment {
    pub center: WorldPoint,
    pub length: f64,
    pub yaw_deg: f64,
    pub height: f64,
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    /// `(width, depth)` in meters.
    pub extent: (f64, f64),
    /// Row-major, one per cell.
    pub tiles: Vec<Tile>,
    pub walls: Vec<WallSegment>,
    /// Sorted by source item, then emission order.
    pub instances: Vec<ExpansionInstance>,
    pub lighting: Lighting,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Pcg(#[from] PcgError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub fn materialize(space: &Space, catalog: &Catalog) -> Result<SceneDescription, PcgError> {
    let cs = space.grid.cell_size;
    let tiles = space
        .terrain
        .iter()
        .zip(&space.residue)
        .map(|(terrain, wear)| Tile {
            terrain: *terrain,
            wear: *wear,
        })
        .collect();
    let walls = space
        .walls
        .iter()
        .map(|e| {
            let (x, y) = (e.x as f64, e.y as f64);
            let (center, yaw_deg) = match e.orientation {
                Orientation::H => (
                    WorldPoint::new((x + 0.5) * cs, WALL_HEIGHT / 2.0, y * cs),
                    0.0,
                ),
                Orientation::V => (
                    WorldPoint::new(x * cs, WALL_HEIGHT / 2.0, (y + 0.5) * cs),
                    90.0,
                ),
            };
            WallSegment {
                center,
                length: cs,
                yaw_deg,
                height: WALL_HEIGHT,
                thickness: WALL_THICKNESS,
            }
        })
        .collect();
    Ok(SceneDescription {
        extent: space.grid.extent(),
        tiles,
        walls,
        instances: expand_scene(space, catalog)?,
        lighting: lighting_for(space.time_of_day),
    })
}

fn point(p: WorldPoint) -> Canon {
    Canon::Arr(vec![
        Canon::Fixed4(p.x),
        Canon::Fixed4(p.y),
        Canon::Fixed4(p.z),
    ])
}

impl SceneDescription {
    /// Canonical JSON: sorted keys, no whitespace, reals with four decimals.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let tiles = self
            .tiles
            .iter()
            .map(|t| {
                Canon::obj([
                    ("terrain", Canon::str(t.terrain.code())),
                    ("wear", Canon::Fixed4(t.wear)),
                ])
            })
            .collect();
        let walls = self
            .walls
            .iter()
            .map(|w| {
                Canon::obj([
                    ("center", point(w.center)),
                    ("length", Canon::Fixed4(w.length)),
                    ("yaw_deg", Canon::Fixed4(w.yaw_deg)),
                    ("height", Canon::Fixed4(w.height)),
                    ("thickness", Canon::Fixed4(w.thickness)),
                ])
            })
            .collect();
        let instances = self
            .instances
            .iter()
            .map(|i| {
                let mut yaw = quantize4(i.yaw_deg);
                if yaw >= 360.0 {
                    yaw -= 360.0;
                }
                Canon::obj([
                    ("mesh", Canon::str(i.mesh.as_str())),
                    ("position", point(i.position)),
                    ("yaw_deg", Canon::Fixed4(yaw)),
                    ("scale", Canon::Fixed4(i.scale)),
                    ("source_item", Canon::UInt(i.source_item)),
                ])
            })
            .collect();
        let l = &self.lighting;
        Canon::obj([
            ("format", Canon::str(SCENE_FORMAT_TAG)),
            ("version", Canon::UInt(SCENE_FORMAT_VERSION)),
            (
                "extent",
                Canon::obj([
                    ("width", Canon::Fixed4(self.extent.0)),
                    ("depth", Canon::Fixed4(self.extent.1)),
                ]),
            ),
            ("tiles", Canon::Arr(tiles)),
            ("walls", Canon::Arr(walls)),
            ("instances", Canon::Arr(instances)),
            (
                "lighting",
                Canon::obj([
                    ("preset", Canon::str(l.preset.name())),
                    ("sun_elevation_deg", Canon::Fixed4(l.sun_elevation_deg)),
                    ("sun_azimuth_deg", Canon::Fixed4(l.sun_azimuth_deg)),
                    ("ambient", Canon::Fixed4(l.ambient)),
                ]),
            ),
            // reserved for ambient audio
            ("ambience", Canon::Null),
        ])
        .to_bytes()
    }
}

/// Materializes `space` and writes the canonical scene description to `path`.
pub fn export_scene(space: &Space, catalog: &Catalog, path: &Path) -> Result<usize, ExportError> {
    let bytes = materialize(space, catalog)?.canonical_bytes();
    std::fs::write(path, &bytes)?;
    Ok(bytes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cell, GridSpec, ItemKind, WallEdge};

    #[test]
    fn empty_space() {
        let s = Space::new("s", "s", 42, GridSpec::default()).unwrap();
        let d = materialize(&s, &Catalog::default()).unwrap();
        assert_eq!(d.tiles.len(), 256);
        assert!(d.walls.is_empty() && d.instances.is_empty());
        assert_eq!(d.extent, (32.0, 32.0));
    }

    #[test]
    fn wall_placement() {
        let mut s = Space::new("s", "s", 42, GridSpec::default()).unwrap();
        s.set_wall(WallEdge::h(0, 0), true).unwrap();
        s.set_wall(WallEdge::v(3, 1), true).unwrap();
        let d = materialize(&s, &Catalog::default()).unwrap();
        assert_eq!(d.walls.len(), 2);
        assert_eq!(d.walls[0].center, WorldPoint::new(1.0, 1.25, 0.0));
        assert_eq!((d.walls[0].length, d.walls[0].yaw_deg), (2.0, 0.0));
        assert_eq!(d.walls[1].center, WorldPoint::new(6.0, 1.25, 3.0));
        assert_eq!(d.walls[1].yaw_deg, 90.0);
        assert_eq!((d.walls[1].height, d.walls[1].thickness), (2.5, 0.2));
    }

    #[test]
    fn lighting_presets() {
        let m = lighting_for(TimeOfDay::Morning);
        assert_eq!(
            (m.sun_elevation_deg, m.sun_azimuth_deg, m.ambient),
            (25.0, 110.0, 0.45)
        );
        let d = lighting_for(TimeOfDay::Dusk);
        assert_eq!(
            (d.sun_elevation_deg, d.sun_azimuth_deg, d.ambient),
            (8.0, 260.0, 0.30)
        );
        let n = lighting_for(TimeOfDay::Night);
        assert_eq!(
            (n.sun_elevation_deg, n.sun_azimuth_deg, n.ambient),
            (-10.0, 0.0, 0.10)
        );
        for t in TimeOfDay::ALL {
            assert_eq!(lighting_for(t).preset, t);
        }
    }

    #[test]
    fn instances_follow_items() {
        let mut s = Space::new("s", "s", 42, GridSpec::default()).unwrap();
        s.place_item(ItemKind::Boulder, Cell::new(5, 5)).unwrap();
        s.place_item(ItemKind::Tree, Cell::new(1, 1)).unwrap();
        let cat = Catalog::default();
        let d = materialize(&s, &cat).unwrap();
        assert_eq!(d.instances.len(), expand_scene(&s, &cat).unwrap().len());
        assert!(d
            .instances
            .windows(2)
            .all(|w| w[0].source_item <= w[1].source_item));
        assert_eq!(
            d.canonical_bytes(),
            materialize(&s, &cat).unwrap().canonical_bytes()
        );
    }
}
