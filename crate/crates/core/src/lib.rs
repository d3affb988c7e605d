//! Collaborative slow-space editing: a grid scene model, its canonical file
//! form, deterministic procedural expansion, the sync protocol and a
//! renderer-agnostic scene export.

pub mod canonical;
pub mod error;
pub mod model;
pub mod pcg;
pub mod protocol;
pub mod scene;
pub mod space_file;

pub use error::{DecodeError, SceneError};
pub use model::{
    validate_space, Cell, GridSpec, ItemKind, Orientation, PlacedItem, Space, Terrain, TimeOfDay,
    Violation, WallEdge, WorldPoint,
};
pub use space_file::{canonical_bytes, decode_space, scene_hash};
