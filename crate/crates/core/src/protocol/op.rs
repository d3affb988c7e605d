use serde_json::Value;

use crate::canonical::{Canon, StrictObj};
use crate::error::{DecodeError, SceneError};
use crate::model::{Cell, ItemKind, Space, Terrain, TimeOfDay, WallEdge};
use crate::space_file::{
    cell_canon, cell_from_value, kind_from_value, terrain_from_value, time_from_value, wall_canon,
    wall_from_value,
};

/// An absolute mutation of a space; the unit of collaboration on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    SetTerrain { cell: Cell, terrain: Terrain },
    SetWall { edge: WallEdge, present: bool },
    PlaceItem { kind: ItemKind, cell: Cell },
    MoveItem { item_id: u64, to_cell: Cell },
    RemoveItem { item_id: u64 },
    SetTimeOfDay { time_of_day: TimeOfDay },
}

impl EditOp {
    /// The item an op refers to by id, if any.
    pub fn target_item(&self) -> Option<u64> {
        match self {
            EditOp::MoveItem { item_id, .. } | EditOp::RemoveItem { item_id } => Some(*item_id),
            _ => None,
        }
    }

    pub(crate) fn with_target(self, id: u64) -> EditOp {
        match self {
            EditOp::MoveItem { to_cell, .. } => EditOp::MoveItem {
                item_id: id,
                to_cell,
            },
            EditOp::RemoveItem { .. } => EditOp::RemoveItem { item_id: id },
            other => other,
        }
    }

    pub fn is_place(&self) -> bool {
        matches!(self, EditOp::PlaceItem { .. })
    }

    pub fn wire_name(&self) -> &'static str {
        match self {
            EditOp::SetTerrain { .. } => "set_terrain",
            EditOp::SetWall { .. } => "set_wall",
            EditOp::PlaceItem { .. } => "place",
            EditOp::MoveItem { .. } => "move",
            EditOp::RemoveItem { .. } => "remove",
            EditOp::SetTimeOfDay { .. } => "set_time",
        }
    }

    pub fn to_canon(self) -> Canon {
        let tag = ("op", Canon::str(self.wire_name()));
        match self {
            EditOp::SetTerrain { cell, terrain } => Canon::obj([
                tag,
                ("cell", cell_canon(cell)),
                ("terrain", Canon::str(terrain.code())),
            ]),
            EditOp::SetWall { edge, present } => Canon::obj([
                tag,
                ("edge", wall_canon(edge)),
                ("present", Canon::Bool(present)),
            ]),
            EditOp::PlaceItem { kind, cell } => Canon::obj([
                tag,
                ("kind", Canon::str(kind.name())),
                ("cell", cell_canon(cell)),
            ]),
            EditOp::MoveItem { item_id, to_cell } => Canon::obj([
                tag,
                ("item_id", Canon::UInt(item_id)),
                ("to_cell", cell_canon(to_cell)),
            ]),
            EditOp::RemoveItem { item_id } => Canon::obj([tag, ("item_id", Canon::UInt(item_id))]),
            EditOp::SetTimeOfDay { time_of_day } => {
                Canon::obj([tag, ("time_of_day", Canon::str(time_of_day.name()))])
            }
        }
    }

    pub fn from_value(v: Value) -> Result<EditOp, DecodeError> {
        let mut o = StrictObj::new("op", v)?;
        let op = match o.string("op")?.as_str() {
            "set_terrain" => EditOp::SetTerrain {
                cell: cell_from_value(&o.take("cell")?)?,
                terrain: terrain_from_value(&o.take("terrain")?)?,
            },
            "set_wall" => EditOp::SetWall {
                edge: wall_from_value(&o.take("edge")?)?,
                present: o.bool("present")?,
            },
            "place" => EditOp::PlaceItem {
                kind: kind_from_value(&o.take("kind")?)?,
                cell: cell_from_value(&o.take("cell")?)?,
            },
            "move" => EditOp::MoveItem {
                item_id: o.u64("item_id")?,
                to_cell: cell_from_value(&o.take("to_cell")?)?,
            },
            "remove" => EditOp::RemoveItem {
                item_id: o.u64("item_id")?,
            },
            "set_time" => EditOp::SetTimeOfDay {
                time_of_day: time_from_value(&o.take("time_of_day")?)?,
            },
            other => return Err(DecodeError::schema(format!("unknown op `{other}`"))),
        };
        o.finish()?;
        Ok(op)
    }
}

/// Applies `op` to `space` in place. Returns the issued id for `PlaceItem`.
/// Atomic: on error `space` is unchanged. Never panics, whatever the op holds.
pub fn apply(space: &mut Space, op: &EditOp) -> Result<Option<u64>, SceneError> {
    match *op {
        EditOp::SetTerrain { cell, terrain } => space.set_terrain(cell, terrain).map(|_| None),
        EditOp::SetWall { edge, present } => space.set_wall(edge, present).map(|_| None),
        EditOp::PlaceItem { kind, cell } => space.place_item(kind, cell).map(Some),
        EditOp::MoveItem { item_id, to_cell } => space.move_item(item_id, to_cell).map(|_| None),
        EditOp::RemoveItem { item_id } => space.remove_item(item_id).map(|_| None),
        EditOp::SetTimeOfDay { time_of_day } => {
            space.set_time_of_day(time_of_day);
            Ok(None)
        }
    }
}
