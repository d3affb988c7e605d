//! Hosts slow spaces: orders edits, broadcasts them, accumulates residue and
//! persists spaces to disk.

pub mod http;
pub mod hub;
pub mod session;
pub mod sim;
pub mod store;

pub use hub::{Hub, ServerConfig};
pub use session::{
    decode_log, encode_log, replay_log, LogEntry, Outbound, Recipient, ReplayError, ResiduePolicy,
    Session,
};
pub use store::{open_space, save_space, SpaceStore, StoreError};
