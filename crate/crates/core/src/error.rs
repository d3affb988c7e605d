use thiserror::Error;

/// Failure of a scene-model edit. An erroring edit leaves the space untouched.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("coordinates out of bounds")]
    OutOfBounds,
    #[error("cell already holds the maximum number of items")]
    CellFull,
    #[error("no such item: {0}")]
    NoSuchItem(u64),
}

impl SceneError {
    /// Stable name used as the rejection reason on the wire.
    pub fn name(&self) -> &'static str {
        match self {
            SceneError::InvalidGrid(_) => "InvalidGrid",
            SceneError::OutOfBounds => "OutOfBounds",
            SceneError::CellFull => "CellFull",
            SceneError::NoSuchItem(_) => "NoSuchItem",
        }
    }
}

/// Malformed input handed to one of the decoders.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at byte {position}: {reason}")]
pub struct DecodeError {
    pub position: usize,
    pub reason: String,
}

impl DecodeError {
    pub(crate) fn schema(reason: impl Into<String>) -> Self {
        DecodeError {
            position: 0,
            reason: reason.into(),
        }
    }

    pub(crate) fn from_json(input: &[u8], err: &serde_json::Error) -> Self {
        // serde_json reports 1-based line/column; translate to a byte offset.
        let mut line = 1;
        let mut offset = 0;
        for (i, b) in input.iter().enumerate() {
            if line == err.line() {
                break;
            }
            if *b == b'\n' {
                line += 1;
                offset = i + 1;
            }
        }
        DecodeError {
            position: (offset + err.column()).saturating_sub(1),
            reason: err.to_string(),
        }
    }
}
