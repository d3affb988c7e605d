//! The canonical space file: snapshot payload, persistence format and hash input.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::canonical::{fnv1a64, parse, Canon, StrictObj};
use crate::error::DecodeError;
use crate::model::{
    quantize4, Cell, GridSpec, ItemKind, Orientation, PlacedItem, Space, Terrain, TimeOfDay,
    WallEdge,
};

pub const FORMAT_TAG: &str = "slowspace";
pub const FORMAT_VERSION: u64 = 1;

pub(crate) fn cell_canon(c: Cell) -> Canon {
    Canon::Arr(vec![Canon::UInt(c.x.into()), Canon::UInt(c.y.into())])
}

pub(crate) fn wall_canon(e: WallEdge) -> Canon {
    Canon::Arr(vec![
        Canon::str(e.orientation.code()),
        Canon::UInt(e.x.into()),
        Canon::UInt(e.y.into()),
    ])
}

pub(crate) fn space_canon(space: &Space) -> Canon {
    let grid = Canon::obj([
        ("cell_size", Canon::Fixed4(space.grid.cell_size)),
        ("height", Canon::UInt(space.grid.height.into())),
        ("width", Canon::UInt(space.grid.width.into())),
    ]);
    let items = space
        .items
        .iter()
        .map(|it| {
            Canon::obj([
                ("cell", cell_canon(it.cell)),
                ("id", Canon::UInt(it.id)),
                ("kind", Canon::str(it.kind.name())),
            ])
        })
        .collect();
    Canon::obj([
        ("format", Canon::str(FORMAT_TAG)),
        ("version", Canon::UInt(FORMAT_VERSION)),
        ("space_id", Canon::str(space.space_id.as_str())),
        ("name", Canon::str(space.name.as_str())),
        ("seed", Canon::UInt(space.seed)),
        ("grid", grid),
        ("time_of_day", Canon::str(space.time_of_day.name())),
        (
            "terrain",
            Canon::Arr(space.terrain.iter().map(|t| Canon::str(t.code())).collect()),
        ),
        (
            "walls",
            Canon::Arr(space.walls.iter().map(|e| wall_canon(*e)).collect()),
        ),
        ("items", Canon::Arr(items)),
        (
            "residue",
            Canon::Arr(space.residue.iter().map(|w| Canon::Fixed4(*w)).collect()),
        ),
        ("next_item_id", Canon::UInt(space.next_item_id)),
        ("op_seq", Canon::UInt(space.op_seq)),
    ])
}

/// Canonical serialization of `space`.
pub fn canonical_bytes(space: &Space) -> Vec<u8> {
    space_canon(space).to_bytes()
}

/// FNV-1a 64 over [`canonical_bytes`].
pub fn scene_hash(space: &Space) -> u64 {
    fnv1a64(&canonical_bytes(space))
}

/// Decodes a space file. The result is structurally well-typed but may still
/// break space invariants; run [`crate::model::validate_space`] on it.
pub fn decode_space(bytes: &[u8]) -> Result<Space, DecodeError> {
    space_from_value(parse(bytes)?)
}

pub(crate) fn cell_from_value(v: &Value) -> Result<Cell, DecodeError> {
    match v.as_array().map(Vec::as_slice) {
        Some([x, y]) => {
            let coord = |v: &Value| {
                v.as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .ok_or_else(|| DecodeError::schema("cell coordinate must be a u32"))
            };
            Ok(Cell::new(coord(x)?, coord(y)?))
        }
        _ => Err(DecodeError::schema("cell must be [x, y]")),
    }
}

pub(crate) fn wall_from_value(v: &Value) -> Result<WallEdge, DecodeError> {
    match v.as_array().map(Vec::as_slice) {
        Some([o, x, y]) => {
            let orientation = o
                .as_str()
                .and_then(Orientation::from_code)
                .ok_or_else(|| DecodeError::schema("wall orientation must be \"H\" or \"V\""))?;
            let cell = cell_from_value(&Value::Array(vec![x.clone(), y.clone()]))?;
            Ok(WallEdge {
                orientation,
                x: cell.x,
                y: cell.y,
            })
        }
        _ => Err(DecodeError::schema("wall must be [orientation, x, y]")),
    }
}

pub(crate) fn terrain_from_value(v: &Value) -> Result<Terrain, DecodeError> {
    v.as_str()
        .and_then(Terrain::from_code)
        .ok_or_else(|| DecodeError::schema("terrain must be one of \"g\", \"r\", \"w\""))
}

pub(crate) fn kind_from_value(v: &Value) -> Result<ItemKind, DecodeError> {
    v.as_str()
        .and_then(ItemKind::from_name)
        .ok_or_else(|| DecodeError::schema(format!("unknown item kind {v}")))
}

pub(crate) fn time_from_value(v: &Value) -> Result<TimeOfDay, DecodeError> {
    v.as_str()
        .and_then(TimeOfDay::from_name)
        .ok_or_else(|| DecodeError::schema(format!("unknown time of day {v}")))
}

pub(crate) fn space_from_value(v: Value) -> Result<Space, DecodeError> {
    let mut o = StrictObj::new("space", v)?;
    if o.string("format")? != FORMAT_TAG {
        return Err(DecodeError::schema("space: format must be \"slowspace\""));
    }
    let version = o.u64("version")?;
    if version != FORMAT_VERSION {
        return Err(DecodeError::schema(format!(
            "space: unsupported version {version}"
        )));
    }
    let space_id = o.string("space_id")?;
    let name = o.string("name")?;
    let seed = o.u64("seed")?;

    let mut g = StrictObj::new("grid", o.take("grid")?)?;
    // Bounds are checked by validation, not here, so corrupt files can be reported in full.
    let grid = GridSpec {
        width: g.u32("width")?,
        height: g.u32("height")?,
        cell_size: quantize4(g.f64("cell_size")?),
    };
    g.finish()?;

    let time_of_day = time_from_value(&o.take("time_of_day")?)?;
    let terrain = o
        .array("terrain")?
        .iter()
        .map(terrain_from_value)
        .collect::<Result<Vec<_>, _>>()?;
    let walls = o
        .array("walls")?
        .iter()
        .map(wall_from_value)
        .collect::<Result<BTreeSet<_>, _>>()?;
    let items = o
        .array("items")?
        .into_iter()
        .map(|v| {
            let mut it = StrictObj::new("item", v)?;
            let item = PlacedItem {
                id: it.u64("id")?,
                kind: kind_from_value(&it.take("kind")?)?,
                cell: cell_from_value(&it.take("cell")?)?,
            };
            it.finish()?;
            Ok(item)
        })
        .collect::<Result<Vec<_>, DecodeError>>()?;
    let residue = o
        .array("residue")?
        .iter()
        .map(|v| {
            v.as_f64()
                .map(quantize4)
                .ok_or_else(|| DecodeError::schema("residue values must be numbers"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let next_item_id = o.u64("next_item_id")?;
    let op_seq = o.u64("op_seq")?;
    o.finish()?;

    Ok(Space {
        space_id,
        name,
        seed,
        grid,
        terrain,
        walls,
        items,
        time_of_day,
        residue,
        next_item_id,
        op_seq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_space;

    fn demo() -> Space {
        let mut s = Space::new("s1", "demo", 42, GridSpec::default()).unwrap();
        s.set_terrain(Cell::new(1, 0), Terrain::Water).unwrap();
        s.set_wall(WallEdge::v(2, 3), true).unwrap();
        s.set_wall(WallEdge::h(2, 3), true).unwrap();
        s.place_item(ItemKind::FlowerPatch, Cell::new(4, 4))
            .unwrap();
        s.set_wear(Cell::new(0, 0), 0.25).unwrap();
        s
    }

    #[test]
    fn fresh_space_layout() {
        let s = Space::new("s1", "demo", 42, GridSpec::new(2, 1, 2.0).unwrap()).unwrap();
        assert_eq!(
            String::from_utf8(canonical_bytes(&s)).unwrap(),
            concat!(
                r#"{"format":"slowspace","grid":{"cell_size":2.0000,"height":1,"width":2},"#,
                r#""items":[],"name":"demo","next_item_id":1,"op_seq":0,"#,
                r#""residue":[0.0000,0.0000],"seed":42,"space_id":"s1","#,
                r#""terrain":["g","g"],"time_of_day":"morning","version":1,"walls":[]}"#
            )
        );
    }

    #[test]
    fn encode_decode_fixpoint() {
        let s = demo();
        let bytes = canonical_bytes(&s);
        let back = decode_space(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(canonical_bytes(&back), bytes);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains(r#""walls":[["H",2,3],["V",2,3]]"#));
    }

    #[test]
    fn one_wall_changes_bytes_and_hash() {
        let a = demo();
        let mut b = demo();
        b.set_wall(WallEdge::h(0, 0), true).unwrap();
        assert_ne!(canonical_bytes(&a), canonical_bytes(&b));
        assert_ne!(scene_hash(&a), scene_hash(&b));
        assert_eq!(scene_hash(&a), scene_hash(&demo()));
    }

    #[test]
    fn decoder_is_strict() {
        let text = String::from_utf8(canonical_bytes(&demo())).unwrap();
        let extra = text.replacen('{', r#"{"zzz":1,"#, 1);
        assert!(decode_space(extra.as_bytes()).is_err());
        let wrong_version = text.replace(r#""version":1"#, r#""version":2"#);
        assert!(decode_space(wrong_version.as_bytes()).is_err());
        let bad_terrain = text.replacen(r#""g""#, r#""x""#, 1);
        assert!(decode_space(bad_terrain.as_bytes()).is_err());
        assert!(decode_space(&text.as_bytes()[..text.len() - 3]).is_err());
    }

    #[test]
    fn out_of_range_values_decode_but_fail_validation() {
        let text = String::from_utf8(canonical_bytes(&demo())).unwrap();
        let corrupt = text.replacen("0.2500", "2.0", 1);
        let s = decode_space(corrupt.as_bytes()).unwrap();
        assert!(validate_space(&s).is_err());
    }
}
