//! Whole-file persistence of spaces in a data directory.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use slowspace_core::{canonical_bytes, decode_space, validate_space, GridSpec, Space, Violation};
use thiserror::Error;

use crate::session::Session;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("space `{0}` not found")]
    NotFound(String),
    #[error("space file `{path}` is corrupt: {}", .violations.join("; "))]
    CorruptFile {
        path: PathBuf,
        violations: Vec<String>,
    },
    #[error("invalid space: {0}")]
    Invalid(String),
    #[error("i/o error on `{path}`: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Ids become file names, so keep them to a safe alphabet.
pub fn is_valid_space_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Reads and validates a space file at an arbitrary path.
pub fn load_space_file(path: &Path) -> Result<Space, StoreError> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            StoreError::NotFound(path.display().to_string())
        } else {
            io_err(path)(e)
        }
    })?;
    let space = decode_space(&bytes).map_err(|e| StoreError::CorruptFile {
        path: path.to_owned(),
        violations: vec![e.to_string()],
    })?;
    validate_space(&space).map_err(|v| StoreError::CorruptFile {
        path: path.to_owned(),
        violations: v.iter().map(Violation::to_string).collect(),
    })?;
    Ok(space)
}

/// A space file written to its temporary sibling but not yet renamed into place.
#[derive(Debug)]
pub struct StagedWrite {
    tmp: PathBuf,
    dest: PathBuf,
    committed: bool,
}

impl StagedWrite {
    pub fn commit(mut self) -> Result<PathBuf, StoreError> {
        fs::rename(&self.tmp, &self.dest).map_err(io_err(&self.dest))?;
        self.committed = true;
        if let Some(dir) = self.dest.parent() {
            // make the rename durable; not every platform can open directories
            if let Ok(d) = File::open(dir) {
                let _ = d.sync_all();
            }
        }
        Ok(self.dest.clone())
    }
}

impl Drop for StagedWrite {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

/// Writes `bytes` to `dest` via write-temp-then-rename.
pub fn stage_bytes(dest: &Path, bytes: &[u8]) -> Result<StagedWrite, StoreError> {
    let mut name = dest.file_name().unwrap_or_default().to_owned();
    name.push(".tmp");
    let tmp = dest.with_file_name(name);
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    Ok(StagedWrite {
        tmp,
        dest: dest.to_owned(),
        committed: false,
    })
}

pub fn write_atomic(dest: &Path, bytes: &[u8]) -> Result<PathBuf, StoreError> {
    stage_bytes(dest, bytes)?.commit()
}

#[derive(Debug, Clone)]
pub struct SpaceStore {
    dir: PathBuf,
}

impl SpaceStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(SpaceStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, space_id: &str) -> Result<PathBuf, StoreError> {
        if !is_valid_space_id(space_id) {
            return Err(StoreError::NotFound(space_id.to_owned()));
        }
        Ok(self.dir.join(format!("{space_id}.json")))
    }

    pub fn exists(&self, space_id: &str) -> bool {
        self.path_for(space_id).is_ok_and(|p| p.is_file())
    }

    pub fn load(&self, space_id: &str) -> Result<Space, StoreError> {
        let path = self.path_for(space_id)?;
        load_space_file(&path).map_err(|e| match e {
            StoreError::NotFound(_) => StoreError::NotFound(space_id.to_owned()),
            other => other,
        })
    }

    /// Writes the canonical file to a temporary path, ready to be committed.
    pub fn stage(&self, space: &Space) -> Result<StagedWrite, StoreError> {
        let path = self.path_for(&space.space_id)?;
        stage_bytes(&path, &canonical_bytes(space))
    }

    pub fn save(&self, space: &Space) -> Result<PathBuf, StoreError> {
        self.stage(space)?.commit()
    }

    /// Creates and persists a fresh space under a new random id.
    pub fn create(&self, name: &str, seed: u64, grid: GridSpec) -> Result<Space, StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let space =
            Space::new(id, name, seed, grid).map_err(|e| StoreError::Invalid(e.to_string()))?;
        self.save(&space)?;
        Ok(space)
    }

    /// `(space_id, name)` of every readable space, sorted by id.
    pub fn list(&self) -> Result<Vec<(String, String)>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let entry = entry.map_err(io_err(&self.dir))?;
            let path = entry.path();
            let Some(id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".json"))
            else {
                continue;
            };
            if !is_valid_space_id(id) {
                continue;
            }
            match self.load(id) {
                Ok(space) => out.push((space.space_id, space.name)),
                Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Loads a stored space and hosts it.
pub fn open_space(store: &SpaceStore, space_id: &str) -> Result<Session, StoreError> {
    store.load(space_id).map(Session::new)
}

/// Persists the session's current space.
pub fn save_space(session: &mut Session, store: &SpaceStore) -> Result<PathBuf, StoreError> {
    let path = store.save(session.space())?;
    session.mark_saved();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use slowspace_core::protocol::EditOp;
    use slowspace_core::{scene_hash, Cell, ItemKind};

    fn store() -> (tempfile::TempDir, SpaceStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = SpaceStore::new(dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn save_then_open_preserves_hash() {
        let (_d, store) = store();
        let space = store.create("garden", 42, GridSpec::default()).unwrap();
        let mut session = Session::new(space);
        let (a, _) = session.join("a");
        session.handle_submit(
            a,
            1,
            EditOp::PlaceItem {
                kind: ItemKind::Tree,
                cell: Cell::new(2, 2),
            },
        );
        let hash = scene_hash(session.space());
        let path = save_space(&mut session, &store).unwrap();
        assert!(!session.is_dirty());
        let first = fs::read(&path).unwrap();
        save_space(&mut session, &store).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);

        let reopened = open_space(&store, &session.space().space_id).unwrap();
        assert_eq!(scene_hash(reopened.space()), hash);
        assert_eq!(canonical_bytes(reopened.space()), first);
    }

    #[test]
    fn missing_and_corrupt() {
        let (_d, store) = store();
        assert!(matches!(
            open_space(&store, "nope"),
            Err(StoreError::NotFound(_))
        ));
        assert!(matches!(
            open_space(&store, "../etc"),
            Err(StoreError::NotFound(_))
        ));

        let space = store
            .create("garden", 1, GridSpec::new(2, 2, 2.0).unwrap())
            .unwrap();
        let path = store.path_for(&space.space_id).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen("0.0000", "2.0000", 1)).unwrap();
        match open_space(&store, &space.space_id) {
            Err(StoreError::CorruptFile { violations, .. }) => {
                assert!(violations[0].contains("residue out of range"))
            }
            other => panic!("expected CorruptFile, got {other:?}"),
        }
        fs::write(&path, "{").unwrap();
        assert!(matches!(
            open_space(&store, &space.space_id),
            Err(StoreError::CorruptFile { .. })
        ));
    }

    #[test]
    fn crash_between_write_and_rename_keeps_old_file() {
        let (_d, store) = store();
        let mut space = store.create("garden", 1, GridSpec::default()).unwrap();
        let path = store.path_for(&space.space_id).unwrap();
        let old = fs::read(&path).unwrap();

        space.place_item(ItemKind::Well, Cell::new(0, 0)).unwrap();
        let staged = store.stage(&space).unwrap();
        // the process dies here: no rename, no cleanup
        std::mem::forget(staged);
        assert_eq!(fs::read(&path).unwrap(), old);
        assert!(store.load(&space.space_id).unwrap().items.is_empty());

        // a later save goes through normally
        store.save(&space).unwrap();
        assert_eq!(store.load(&space.space_id).unwrap(), space);
    }

    #[test]
    fn listing() {
        let (_d, store) = store();
        let a = store.create("a", 1, GridSpec::default()).unwrap();
        let b = store.create("b", 2, GridSpec::default()).unwrap();
        fs::write(store.dir().join("junk.txt"), "x").unwrap();
        let mut expected = vec![(a.space_id, "a".to_string()), (b.space_id, "b".to_string())];
        expected.sort();
        assert_eq!(store.list().unwrap(), expected);
    }
}
